//! Calibrated scenarios shipped with the library.

use crate::error::{LagoError, Result};
use crate::sim::config::ScenarioConfig;

const BUNDLED: &[(&str, &str)] = &[
    ("table1_J6", include_str!("../../scenarios/table1_J6.toml")),
    ("table1_J10", include_str!("../../scenarios/table1_J10.toml")),
    ("table1_J20", include_str!("../../scenarios/table1_J20.toml")),
    ("table1_J20_fixedZ", include_str!("../../scenarios/table1_J20_fixedZ.toml")),
    ("null", include_str!("../../scenarios/null.toml")),
    ("cubic", include_str!("../../scenarios/cubic.toml")),
    ("extracvd_goal5", include_str!("../../scenarios/extracvd_goal5.toml")),
    ("extracvd_goal5_lb", include_str!("../../scenarios/extracvd_goal5_lb.toml")),
    ("extracvd_goal9", include_str!("../../scenarios/extracvd_goal9.toml")),
    ("extracvd_goal9_lb", include_str!("../../scenarios/extracvd_goal9_lb.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Raw TOML text of a bundled scenario.
pub fn source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<ScenarioConfig> {
    let text = source(name).ok_or_else(|| LagoError::config("scenario", format!("no bundled scenario '{name}'")))?;
    ScenarioConfig::from_toml(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_scenarios_parse() {
        for name in names() {
            let cfg = load(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.name, name);
        }
    }
}
