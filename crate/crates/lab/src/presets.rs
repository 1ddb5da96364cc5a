//! Built-in configurations, selectable with `--preset NAME`.

const PRESETS: [(&str, &str); 6] = [
    ("linear-single-mode", include_str!("../presets/linear-single-mode.toml")),
    ("memory-audit", include_str!("../presets/memory-audit.toml")),
    ("decay", include_str!("../presets/decay.toml")),
    ("cont-dep", include_str!("../presets/cont-dep.toml")),
    ("sweep", include_str!("../presets/sweep.toml")),
    ("sweep-zero-forcing", include_str!("../presets/sweep-zero-forcing.toml")),
];

/// TOML text of a preset.
pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}
