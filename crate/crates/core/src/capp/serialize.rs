use std::fmt;

use crate::rational::format_rational;

use super::{CappScript, Invalidate, Workers};

impl fmt::Display for Invalidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Invalidate::None => f.write_str("none"),
            Invalidate::Overload => f.write_str("overload"),
            Invalidate::CapacityUsed(p) => write!(f, "capacity_used: {p}%"),
            Invalidate::MaxConcurrentInvocations(n) => write!(f, "max_concurrent_invocations: {n}"),
            Invalidate::MaxLatency(t) => write!(f, "max_latency: {}", format_rational(t)),
        }
    }
}

/// Canonical form: every block lists its strategy and invalidation rule,
/// and `followup` appears only when the script gave one.
impl fmt::Display for CappScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for policy in self.policies.values() {
            writeln!(f, "- {}:", policy.tag)?;
            for block in &policy.blocks {
                match &block.workers {
                    Workers::All => writeln!(f, "  - workers: *")?,
                    Workers::Labels(labels) => {
                        writeln!(f, "  - workers:")?;
                        for label in labels {
                            writeln!(f, "      - wrk: {label}")?;
                        }
                    }
                }
                writeln!(f, "    strategy: {}", block.strategy)?;
                match &block.invalidate {
                    rule @ (Invalidate::None | Invalidate::Overload) => writeln!(f, "    invalidate: {rule}")?,
                    rule => writeln!(f, "    invalidate:\n      {rule}")?,
                }
            }
            if let Some(followup) = policy.followup {
                writeln!(f, "  followup: {}", followup.keyword())?;
            }
        }
        Ok(())
    }
}
