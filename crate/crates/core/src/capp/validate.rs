use crate::diagnostic::Diagnostic;

use super::{CappScript, Followup, Workers, DEFAULT_TAG};

/// Checks a script against the deployed fleet and the registered functions,
/// given as `(function, tag)` pairs.
pub fn validate(script: &CappScript, fleet: &[String], registry: &[(String, Option<String>)]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let has_default = script.default_policy().is_some();
    for policy in script.policies.values() {
        for block in &policy.blocks {
            if let Workers::Labels(labels) = &block.workers {
                for label in labels {
                    if !fleet.contains(label) {
                        out.push(Diagnostic::error(
                            block.span.line,
                            block.span.column,
                            format!("unknown worker {label}"),
                        ));
                    }
                }
            }
        }
        if policy.tag != DEFAULT_TAG && !registry.iter().any(|(_, tag)| tag.as_deref() == Some(policy.tag.as_str())) {
            out.push(Diagnostic::warning(
                policy.span.line,
                policy.span.column,
                format!("no function is tagged {}", policy.tag),
            ));
        }
        if policy.followup == Some(Followup::Default) && !has_default {
            out.push(Diagnostic::error(
                policy.span.line,
                policy.span.column,
                format!("policy {} falls back to a default policy that does not exist", policy.tag),
            ));
        }
    }
    if !has_default {
        for (function, tag) in registry {
            let message = match tag {
                Some(tag) if script.policy(tag).is_none() => format!("no policy for tag {tag}"),
                None => format!("function {function} is untagged and there is no default policy"),
                Some(_) => continue,
            };
            out.push(Diagnostic::error(0, 0, message));
        }
    }
    out
}
