use crate::model::{Orientation, StrainState};
use crate::netlist::{Circuit, ElementKind};
use crate::par::{map_slice, Exec};

use super::Result;

/// Copy of `c` with every OTFT at strain `epsilon`. With `wire_scaling`,
/// resistors flagged WIRE scale by (1 + ε)².
pub fn strained_circuit(c: &Circuit, epsilon: f64, orientation: Orientation, wire_scaling: bool) -> Result<Circuit> {
    let state = StrainState::new(epsilon, orientation)?;
    let mut out = c.clone();
    for e in &mut out.elements {
        match &mut e.kind {
            ElementKind::Otft { overrides, .. } => overrides.strain = Some(state),
            ElementKind::Resistor { r, wire: true } if wire_scaling => *r *= (1.0 + epsilon).powi(2),
            _ => {}
        }
    }
    Ok(out)
}

/// Evaluates `metric` on the circuit at each strain value.
pub fn strain_study<T, F>(
    c: &Circuit,
    strains: &[f64],
    orientation: Orientation,
    wire_scaling: bool,
    exec: Exec,
    metric: F,
) -> Result<Vec<(f64, T)>>
where
    T: Send,
    F: Fn(&Circuit) -> Result<T> + Sync + Send,
{
    map_slice(strains, exec, |&eps| {
        let ckt = strained_circuit(c, eps, orientation, wire_scaling)?;
        Ok((eps, metric(&ckt)?))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse;

    #[test]
    fn wires_scale_only_when_asked() {
        let c = parse("w\nV1 a 0 1\nRw a b 100 WIRE\nR2 b 0 100\n").unwrap();
        let s = strained_circuit(&c, 0.01, Orientation::ParallelToChannelLength, true).unwrap();
        let r = |c: &Circuit, n: &str| match c.element(n).unwrap().kind {
            ElementKind::Resistor { r, .. } => r,
            _ => unreachable!(),
        };
        assert!((r(&s, "rw") - 102.01).abs() < 1e-9);
        assert_eq!(r(&s, "r2"), 100.0);
        let s = strained_circuit(&c, 0.01, Orientation::ParallelToChannelLength, false).unwrap();
        assert_eq!(r(&s, "rw"), 100.0);
    }

    #[test]
    fn negative_strain_rejected() {
        let c = parse("w\nV1 a 0 1\nR1 a 0 1\n").unwrap();
        assert!(strained_circuit(&c, -0.1, Orientation::ParallelToChannelLength, false).is_err());
    }
}
