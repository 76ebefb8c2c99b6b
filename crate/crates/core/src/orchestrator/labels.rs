use std::fmt;
use std::str::FromStr;

/// Run-label family: `O` for orchestrated multi-agent runs, `AS` for the
/// single-prompt baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Debate,
    Baseline,
}

/// Replication-scheme label, rendered "O<pd>_<rep>" for debates and
/// "AS_<pd>" for baselines. `parse(render(x)) == x` always holds; baseline
/// labels therefore pin their replication index to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunLabel {
    kind: LabelKind,
    pd_index: u32,
    replication_index: u32,
}

impl RunLabel {
    pub fn debate(pd_index: u32, replication_index: u32) -> Self {
        RunLabel { kind: LabelKind::Debate, pd_index: pd_index.max(1), replication_index: replication_index.max(1) }
    }

    pub fn baseline(pd_index: u32) -> Self {
        RunLabel { kind: LabelKind::Baseline, pd_index: pd_index.max(1), replication_index: 1 }
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn pd_index(&self) -> u32 {
        self.pd_index
    }

    pub fn replication_index(&self) -> u32 {
        self.replication_index
    }

    pub fn render(&self) -> String {
        match self.kind {
            LabelKind::Debate => format!("O{}_{}", self.pd_index, self.replication_index),
            LabelKind::Baseline => format!("AS_{}", self.pd_index),
        }
    }

    pub fn parse(text: &str) -> Option<RunLabel> {
        if let Some(rest) = text.strip_prefix("AS_") {
            let pd_index: u32 = rest.parse().ok()?;
            if pd_index < 1 {
                return None;
            }
            return Some(RunLabel::baseline(pd_index));
        }
        let rest = text.strip_prefix('O')?;
        let (pd, rep) = rest.split_once('_')?;
        let pd_index: u32 = pd.parse().ok()?;
        let replication_index: u32 = rep.parse().ok()?;
        if pd_index < 1 || replication_index < 1 {
            return None;
        }
        Some(RunLabel::debate(pd_index, replication_index))
    }
}

impl fmt::Display for RunLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for RunLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RunLabel::parse(s).ok_or_else(|| format!("'{s}' is not a valid run label"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_both_families() {
        assert_eq!(RunLabel::debate(1, 3).render(), "O1_3");
        assert_eq!(RunLabel::baseline(2).render(), "AS_2");
    }

    #[test]
    fn parse_render_round_trip() {
        for label in [
            RunLabel::debate(1, 1),
            RunLabel::debate(3, 2),
            RunLabel::debate(12, 7),
            RunLabel::baseline(1),
            RunLabel::baseline(9),
        ] {
            assert_eq!(RunLabel::parse(&label.render()), Some(label));
        }
    }

    #[test]
    fn rejects_malformed_labels() {
        for bad in ["", "O1", "O_1", "Ox_1", "AS_", "AS_x", "B1_1", "O0_1", "O1_0"] {
            assert_eq!(RunLabel::parse(bad), None, "should reject {bad:?}");
        }
    }
}
