//! Embedded figure-reproduction configs.

use crate::config::ConfigFile;
use crate::error::{CliError, Result};

pub const PRESETS: [(&str, &str); 5] = [
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
];

pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            CliError::usage(
                "preset",
                format!("unknown preset '{name}' (known: {})", known.join(", ")),
            )
        })
}

pub fn preset(name: &str) -> Result<ConfigFile> {
    ConfigFile::parse(preset_text(name)?)
}
