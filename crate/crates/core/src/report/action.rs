use serde::{Deserialize, Serialize};

use crate::propagate::SuspicionVerdict;

/// What to do about a library reported as suspicious.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    IgnoreWarnings,
    Replacement,
    ContinueDevelopment,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::IgnoreWarnings => "ignore_warnings",
            Action::Replacement => "replacement",
            Action::ContinueDevelopment => "continue_development",
        }
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Human-supplied context for one library; the tool cannot infer either flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LibraryContext {
    pub security_relevant: bool,
    pub alternatives_exist: bool,
}

impl Default for LibraryContext {
    /// Fail safe: assume the library matters and cannot simply be swapped.
    fn default() -> Self {
        Self {
            security_relevant: true,
            alternatives_exist: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActionPolicy {
    /// Continue development even when alternatives exist.
    pub prefer_continue_over_replace: bool,
}

/// Decision tree for suspicious libraries; unsuspicious ones need no action.
pub fn recommend_action(verdict: &SuspicionVerdict, context: &LibraryContext, policy: &ActionPolicy) -> Option<Action> {
    verdict
        .is_suspicious()
        .then(|| decide(context.security_relevant, context.alternatives_exist, policy))
}

/// The bare decision table behind [`recommend_action`].
pub fn decide(security_relevant: bool, alternatives_exist: bool, policy: &ActionPolicy) -> Action {
    match (security_relevant, alternatives_exist) {
        (false, _) => Action::IgnoreWarnings,
        (true, true) if !policy.prefer_continue_over_replace => Action::Replacement,
        (true, _) => Action::ContinueDevelopment,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MaintenanceLabel;
    use crate::propagate::Verdict;

    fn verdict(v: Verdict) -> SuspicionVerdict {
        SuspicionVerdict {
            node: "npm:x".parse().unwrap(),
            self_label: MaintenanceLabel::Dormant,
            verdict: v,
            culprits: vec![],
            risk_score: 0.0,
        }
    }

    #[test]
    fn table() {
        let p = ActionPolicy::default();
        assert_eq!(decide(false, true, &p), Action::IgnoreWarnings);
        assert_eq!(decide(false, false, &p), Action::IgnoreWarnings);
        assert_eq!(decide(true, true, &p), Action::Replacement);
        assert_eq!(decide(true, false, &p), Action::ContinueDevelopment);
        let prefer = ActionPolicy {
            prefer_continue_over_replace: true,
        };
        assert_eq!(decide(true, true, &prefer), Action::ContinueDevelopment);
    }

    #[test]
    fn unsuspicious_gets_no_action() {
        let ctx = LibraryContext::default();
        let p = ActionPolicy::default();
        assert_eq!(recommend_action(&verdict(Verdict::Unsuspicious), &ctx, &p), None);
        assert_eq!(
            recommend_action(&verdict(Verdict::Suspicious), &ctx, &p),
            Some(Action::ContinueDevelopment)
        );
    }
}
