//! Calibrated circuits and device data shipped with the crate.
//!
//! The circuit cards carry parameters fitted to the bundled device data and
//! one parasitic capacitance per ring oscillator; see the README for how each
//! was obtained.

macro_rules! fixture {
    ($path:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/", $path))
    };
}

pub const PSEUDO_E_INVERTER: &str = fixture!("circuits/pseudo_e_inverter.cir");
pub const COMPLEMENTARY_INVERTER: &str = fixture!("circuits/complementary_inverter.cir");
/// Pseudo-E ring oscillator, driver/load width ratio 20.
pub const PSEUDO_E_RO_W20: &str = fixture!("circuits/pseudo_e_ro_w20.cir");
/// Same ring with width ratio 10.
pub const PSEUDO_E_RO_W10: &str = fixture!("circuits/pseudo_e_ro_w10.cir");
pub const COMPLEMENTARY_RO: &str = fixture!("circuits/complementary_ro.cir");
pub const NAND: &str = fixture!("circuits/nand.cir");
pub const NOR: &str = fixture!("circuits/nor.cir");
pub const NEURON: &str = fixture!("circuits/neuron.cir");

/// Synthetic transfer and output sweeps of one device, in the measurement
/// CSV schema.
pub const FIG2_DEVICE: &str = fixture!("fig2_device.csv");

/// Every well-formed circuit, by file stem.
pub const CIRCUITS: &[(&str, &str)] = &[
    ("pseudo_e_inverter", PSEUDO_E_INVERTER),
    ("complementary_inverter", COMPLEMENTARY_INVERTER),
    ("pseudo_e_ro_w20", PSEUDO_E_RO_W20),
    ("pseudo_e_ro_w10", PSEUDO_E_RO_W10),
    ("complementary_ro", COMPLEMENTARY_RO),
    ("nand", NAND),
    ("nor", NOR),
    ("neuron", NEURON),
];

/// Netlists that must be rejected. Each starts with `* expect line N`.
pub const MALFORMED: &[(&str, &str)] = &[
    ("bad_ic", fixture!("malformed/bad_ic.cir")),
    ("bad_mc", fixture!("malformed/bad_mc.cir")),
    ("bad_number", fixture!("malformed/bad_number.cir")),
    ("bad_polarity", fixture!("malformed/bad_polarity.cir")),
    ("bad_pulse", fixture!("malformed/bad_pulse.cir")),
    ("bad_tran", fixture!("malformed/bad_tran.cir")),
    ("duplicate_element", fixture!("malformed/duplicate_element.cir")),
    ("invalid_model", fixture!("malformed/invalid_model.cir")),
    ("missing_value", fixture!("malformed/missing_value.cir")),
    ("undefined_model", fixture!("malformed/undefined_model.cir")),
    ("undefined_param", fixture!("malformed/undefined_param.cir")),
    ("undefined_subckt", fixture!("malformed/undefined_subckt.cir")),
    ("unknown_card", fixture!("malformed/unknown_card.cir")),
    ("unterminated_subckt", fixture!("malformed/unterminated_subckt.cir")),
];

/// Line number declared in a malformed fixture's header.
pub fn expected_line(text: &str) -> Option<usize> {
    text.lines().next()?.strip_prefix("* expect line ")?.trim().parse().ok()
}
