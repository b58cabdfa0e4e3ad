//! Experiment configs shipped with the crate.

pub const PRESETS: [(&str, &str); 4] = [
    ("reference", include_str!("../../../presets/reference.toml")),
    ("equilibrium", include_str!("../../../presets/equilibrium.toml")),
    ("stability", include_str!("../../../presets/stability.toml")),
    ("shock", include_str!("../../../presets/shock.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}
