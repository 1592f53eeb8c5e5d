//! Regenerates `fixtures/fig2_device.csv`: transfer and output sweeps of a
//! W/L = 380/35 um p-type device drawn from the reference card below, with
//! 2% multiplicative noise and a 2 pA leakage floor.
//!
//! Usage: cargo run --example synthesize_fig2 > fixtures/fig2_device.csv

use otftsim::extract::{write_measurements, IvSweep, SweepKind};
use otftsim::model::{DeviceGeometry, OtftParams, Polarity};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let p = OtftParams {
        polarity: Polarity::P,
        mu0: 2.35e-5,
        vth: -0.06,
        ss: 0.3,
        lambda: 0.015,
        gamma: 0.0,
        rc: 5e5,
        cox: 3.5e-4,
        geom: DeviceGeometry::new(380e-6, 35e-6, 5e-6).unwrap(),
        triode_order: OtftParams::DEFAULT_TRIODE_ORDER,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut measure = |s: IvSweep| {
        let pts = s
            .points
            .iter()
            .map(|&(v, i)| {
                let leak = -2e-12 * (1.0 + 0.3 * noise.sample(&mut rng));
                (v, i * (1.0 + 0.02 * noise.sample(&mut rng)) + leak)
            })
            .collect();
        IvSweep { points: pts, ..s }
    };

    let vgs: Vec<f64> = (0..=60).map(|k| 1.0 - 0.1 * k as f64).collect();
    let mut sweeps = vec![measure(IvSweep::synthesize(&p, SweepKind::Transfer, "fig2", -5.0, &vgs).unwrap())];
    let vds: Vec<f64> = (0..=50).map(|k| -0.1 * k as f64).collect();
    for g in 0..=5 {
        let s = IvSweep::synthesize(&p, SweepKind::Output, "fig2", -(g as f64), &vds).unwrap();
        sweeps.push(measure(s));
    }
    let note = "Synthetic reference device (W/L = 380/35 um), generated by \
                examples/synthesize_fig2.rs; not digitized measurement data.";
    write_measurements(std::io::stdout().lock(), &sweeps, Some(note)).unwrap();
}
