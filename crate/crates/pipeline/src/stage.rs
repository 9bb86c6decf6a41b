use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Pipeline stages in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    GenScenes,
    Split,
    Simulate,
    ExtractParams,
    MakeLabels,
    MakeFeatures,
    Baseline,
    Evaluate,
    Plot,
    ExportGolden,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::GenScenes,
        Stage::Split,
        Stage::Simulate,
        Stage::ExtractParams,
        Stage::MakeLabels,
        Stage::MakeFeatures,
        Stage::Baseline,
        Stage::Evaluate,
        Stage::Plot,
        Stage::ExportGolden,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::GenScenes => "gen-scenes",
            Stage::Split => "split",
            Stage::Simulate => "simulate",
            Stage::ExtractParams => "extract-params",
            Stage::MakeLabels => "make-labels",
            Stage::MakeFeatures => "make-features",
            Stage::Baseline => "baseline",
            Stage::Evaluate => "evaluate",
            Stage::Plot => "plot",
            Stage::ExportGolden => "export-golden",
        }
    }

    /// Stages whose outputs must exist before this one runs.
    pub fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::GenScenes | Stage::ExportGolden => &[],
            Stage::Split | Stage::Simulate => &[Stage::GenScenes],
            Stage::ExtractParams => &[Stage::Simulate],
            Stage::MakeLabels => &[Stage::ExtractParams],
            Stage::MakeFeatures => &[Stage::Simulate],
            Stage::Baseline => &[Stage::Simulate, Stage::MakeLabels],
            Stage::Evaluate | Stage::Plot => &[Stage::MakeLabels, Stage::Baseline],
        }
    }

    /// Stages whose outputs feed this one when present.
    pub fn optional_upstream(self) -> &'static [Stage] {
        match self {
            Stage::MakeLabels | Stage::Baseline | Stage::Evaluate | Stage::Plot => &[Stage::Split],
            _ => &[],
        }
    }

    /// Manifest file-key prefixes owned by this stage.
    pub fn file_prefixes(self) -> &'static [&'static str] {
        match self {
            Stage::GenScenes => &["scene"],
            Stage::Split => &[],
            Stage::Simulate => &["rirs", "ref/"],
            Stage::ExtractParams => &["params"],
            Stage::MakeLabels => &["label/", "label_test/", "normalizer"],
            Stage::MakeFeatures => &["feature/"],
            Stage::Baseline => &["baseline/"],
            Stage::Evaluate => &["report/"],
            Stage::Plot => &["plot/"],
            Stage::ExportGolden => &["golden/"],
        }
    }

    /// Whether `self` reads, directly or transitively, the outputs of `other`.
    pub fn depends_on(self, other: Stage) -> bool {
        self.upstream().iter().chain(self.optional_upstream()).any(|&u| u == other || u.depends_on(other))
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_topological() {
        for (i, s) in Stage::ALL.iter().enumerate() {
            for u in s.upstream().iter().chain(s.optional_upstream()) {
                assert!(Stage::ALL[..i].contains(u), "{s} before {u}");
            }
        }
    }

    #[test]
    fn names_parse_back() {
        for s in Stage::ALL {
            assert_eq!(s.name().parse::<Stage>().unwrap(), s);
        }
        assert!(Stage::Evaluate.depends_on(Stage::GenScenes));
        assert!(!Stage::MakeFeatures.depends_on(Stage::MakeLabels));
    }
}
