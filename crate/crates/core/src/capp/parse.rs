use indexmap::IndexMap;

use crate::minisl::is_identifier;
use crate::rational::parse_rational;
use crate::span::Span;

use super::{Block, CappError, CappScript, Followup, Invalidate, Policy, Strategy, Workers, DEFAULT_TAG};

struct Line<'a> {
    number: u32,
    indent: usize,
    dash: bool,
    /// `key: value` split at the first colon; bare scalars have no value.
    key: &'a str,
    value: Option<&'a str>,
    has_colon: bool,
}

fn strip_comment(text: &str) -> &str {
    let bytes = text.as_bytes();
    for (k, &b) in bytes.iter().enumerate() {
        if b == b'#' && (k == 0 || bytes[k - 1].is_ascii_whitespace()) {
            return &text[..k];
        }
    }
    text
}

fn split_line(number: u32, raw: &str) -> Result<Option<Line<'_>>, CappError> {
    let text = strip_comment(raw).trim_end();
    if text.trim().is_empty() {
        return Ok(None);
    }
    if text.contains('\t') {
        return Err(CappError::Syntax {
            line: number,
            message: "tabs are not allowed for indentation".into(),
        });
    }
    let indent = text.len() - text.trim_start().len();
    let mut content = text.trim_start();
    let dash = content == "-" || content.starts_with("- ");
    if dash {
        content = content[1..].trim_start();
    }
    let (key, value, has_colon) = match content.split_once(':') {
        Some((k, v)) => {
            let v = v.trim();
            (k.trim(), if v.is_empty() { None } else { Some(v) }, true)
        }
        None => (content.trim(), None, false),
    };
    if key.is_empty() {
        return Err(CappError::Syntax {
            line: number,
            message: "missing key".into(),
        });
    }
    Ok(Some(Line {
        number,
        indent,
        dash,
        key,
        value,
        has_colon,
    }))
}

enum Mode {
    Normal,
    Workers,
    /// After `invalidate:` with the option on the following line.
    InvalidateOption {
        indent: usize,
    },
}

struct Parser {
    policies: IndexMap<String, Policy>,
    policy: Option<Policy>,
    block: Option<Block>,
    labels: Vec<String>,
    strategy_set: bool,
    invalidate_set: bool,
    mode: Mode,
}

fn syntax(line: u32, message: impl Into<String>) -> CappError {
    CappError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_invalidate(line: u32, key: &str, value: Option<&str>) -> Result<Invalidate, CappError> {
    let need = |what: &str| syntax(line, format!("{key} needs {what}"));
    Ok(match key {
        "overload" | "none" if value.is_some() => {
            return Err(syntax(line, format!("{key} takes no argument")));
        }
        "overload" => Invalidate::Overload,
        "none" => Invalidate::None,
        "capacity_used" => {
            let v = value.ok_or_else(|| need("a percentage"))?;
            let digits = v.strip_suffix('%').unwrap_or(v).trim();
            match digits.parse::<u32>() {
                Ok(p) if p <= 100 => Invalidate::CapacityUsed(p),
                _ => {
                    return Err(CappError::InvalidBlock {
                        line,
                        message: format!("capacity_used must be a percentage in [0, 100], got {v}"),
                    })
                }
            }
        }
        "max_concurrent_invocations" => {
            let v = value.ok_or_else(|| need("a count"))?;
            match v.parse::<u64>() {
                Ok(n) if n > 0 => Invalidate::MaxConcurrentInvocations(n),
                _ => {
                    return Err(CappError::InvalidBlock {
                        line,
                        message: format!("max_concurrent_invocations must be a positive integer, got {v}"),
                    })
                }
            }
        }
        "max_latency" => {
            let v = value.ok_or_else(|| need("a threshold"))?;
            match parse_rational(v) {
                Some(t) if t >= num::Zero::zero() => Invalidate::MaxLatency(t),
                _ => {
                    return Err(CappError::InvalidBlock {
                        line,
                        message: format!("max_latency must be a nonnegative number, got {v}"),
                    })
                }
            }
        }
        other => {
            return Err(CappError::UnknownInvalidate {
                line,
                name: other.to_string(),
            })
        }
    })
}

impl Parser {
    fn finish_block(&mut self) -> Result<(), CappError> {
        if let Some(mut block) = self.block.take() {
            if let Workers::Labels(_) = block.workers {
                if self.labels.is_empty() {
                    return Err(CappError::InvalidBlock {
                        line: block.span.line,
                        message: "a block needs at least one worker".into(),
                    });
                }
                block.workers = Workers::Labels(std::mem::take(&mut self.labels));
            }
            self.policy.as_mut().expect("block inside a policy").blocks.push(block);
        }
        self.strategy_set = false;
        self.invalidate_set = false;
        Ok(())
    }

    fn finish_policy(&mut self) -> Result<(), CappError> {
        self.finish_block()?;
        if let Some(policy) = self.policy.take() {
            if policy.blocks.is_empty() {
                return Err(CappError::InvalidBlock {
                    line: policy.span.line,
                    message: format!("policy {} has no blocks", policy.tag),
                });
            }
            if self.policies.contains_key(&policy.tag) {
                return Err(CappError::DuplicateTag {
                    line: policy.span.line,
                    tag: policy.tag,
                });
            }
            self.policies.insert(policy.tag.clone(), policy);
        }
        Ok(())
    }

    fn block_mut(&mut self, line: u32, key: &str) -> Result<&mut Block, CappError> {
        self.block
            .as_mut()
            .ok_or_else(|| syntax(line, format!("{key} must follow a '- workers:' block")))
    }

    fn line(&mut self, l: &Line<'_>, top: usize) -> Result<(), CappError> {
        if let Mode::InvalidateOption { indent } = self.mode {
            self.mode = Mode::Normal;
            if l.indent <= indent || l.dash {
                return Err(syntax(l.number, "expected an invalidate option below 'invalidate:'"));
            }
            let rule = parse_invalidate(l.number, l.key, l.value)?;
            self.block_mut(l.number, "invalidate")?.invalidate = rule;
            return Ok(());
        }
        if l.indent <= top {
            if !l.has_colon || l.value.is_some() {
                return Err(syntax(l.number, format!("expected a policy tag followed by ':', found {:?}", l.key)));
            }
            if l.key != DEFAULT_TAG && !is_identifier(l.key) {
                return Err(syntax(l.number, format!("invalid policy tag {:?}", l.key)));
            }
            self.finish_policy()?;
            self.mode = Mode::Normal;
            self.policy = Some(Policy {
                tag: l.key.to_string(),
                blocks: Vec::new(),
                followup: None,
                span: Span::new(l.number, l.indent as u32 + 1),
            });
            return Ok(());
        }
        if self.policy.is_none() {
            return Err(syntax(l.number, "expected a policy tag"));
        }
        if let Mode::Workers = self.mode {
            if l.dash && !(l.has_colon && l.key == "workers") {
                let label = match (l.has_colon, l.key, l.value) {
                    (true, "wrk", Some(label)) => label,
                    (false, label, None) => label,
                    _ => return Err(syntax(l.number, "expected '- wrk: <label>'")),
                };
                if !is_identifier(label) {
                    return Err(syntax(l.number, format!("invalid worker label {label:?}")));
                }
                self.labels.push(label.to_string());
                return Ok(());
            }
            self.mode = Mode::Normal;
        }
        if !l.has_colon {
            return Err(syntax(l.number, format!("unexpected {:?}", l.key)));
        }
        match l.key {
            "workers" => {
                if !l.dash {
                    return Err(syntax(l.number, "a block starts with '- workers:'"));
                }
                self.finish_block()?;
                let workers = match l.value {
                    Some("*") => Workers::All,
                    Some(other) => return Err(syntax(l.number, format!("expected '*' or a worker list, found {other:?}"))),
                    None => {
                        self.mode = Mode::Workers;
                        Workers::Labels(Vec::new())
                    }
                };
                let mut block = Block::new(workers);
                block.span = Span::new(l.number, l.indent as u32 + 1);
                self.block = Some(block);
            }
            "strategy" => {
                let value = l.value.ok_or_else(|| syntax(l.number, "strategy needs a value"))?;
                let strategy = Strategy::from_keyword(value).ok_or_else(|| CappError::UnknownStrategy {
                    line: l.number,
                    name: value.to_string(),
                })?;
                if self.strategy_set {
                    return Err(syntax(l.number, "strategy given twice for one block"));
                }
                self.block_mut(l.number, "strategy")?.strategy = strategy;
                self.strategy_set = true;
            }
            "invalidate" => {
                if self.invalidate_set {
                    return Err(syntax(l.number, "invalidate given twice for one block"));
                }
                self.block_mut(l.number, "invalidate")?;
                self.invalidate_set = true;
                match l.value {
                    None => self.mode = Mode::InvalidateOption { indent: l.indent },
                    Some(v) => {
                        let (key, arg) = match v.split_once(':') {
                            Some((k, a)) => (k.trim(), Some(a.trim()).filter(|a| !a.is_empty())),
                            None => (v, None),
                        };
                        let rule = parse_invalidate(l.number, key, arg)?;
                        self.block_mut(l.number, "invalidate")?.invalidate = rule;
                    }
                }
            }
            "followup" => {
                let policy = self.policy.as_mut().unwrap();
                if policy.followup.is_some() {
                    return Err(syntax(l.number, "followup given twice for one policy"));
                }
                policy.followup = Some(match l.value {
                    Some("default") => Followup::Default,
                    Some("fail") => Followup::Fail,
                    other => {
                        return Err(syntax(
                            l.number,
                            format!("followup must be default or fail, found {:?}", other.unwrap_or("")),
                        ))
                    }
                });
            }
            other => return Err(syntax(l.number, format!("unknown key {other:?}"))),
        }
        Ok(())
    }
}

/// Parses the indentation-based script syntax.
///
/// Keys are recognised by name: `strategy` and `invalidate` belong to the
/// most recent `- workers:` block and `followup` to the enclosing policy,
/// whatever their indentation below the policy tag.
pub fn parse_capp(text: &str) -> Result<CappScript, CappError> {
    let mut parser = Parser {
        policies: IndexMap::new(),
        policy: None,
        block: None,
        labels: Vec::new(),
        strategy_set: false,
        invalidate_set: false,
        mode: Mode::Normal,
    };
    let mut top = None;
    for (k, raw) in text.lines().enumerate() {
        let Some(line) = split_line(k as u32 + 1, raw)? else { continue };
        let top = *top.get_or_insert(line.indent);
        parser.line(&line, top)?;
    }
    if let Mode::InvalidateOption { .. } = parser.mode {
        return Err(syntax(text.lines().count() as u32, "missing invalidate option"));
    }
    parser.finish_policy()?;
    Ok(CappScript {
        policies: parser.policies,
    })
}
