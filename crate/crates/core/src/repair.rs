//! Validate-and-fix loop around a code model.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::mermaid::{sanitize, validate, ParseDiagnostics};
use crate::vlm::{extract_code_block, read_fixture, ChatClient, GenerationParams, ReplyKey, VlmError};

pub const MAX_REPAIR_ITERATIONS: usize = 10;
pub const FIXER_PROMPT: &str = include_str!("../prompts/fixer.v1.txt");
pub const FIXER_SYSTEM_PROMPT: &str = include_str!("../prompts/fixer_system.v1.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairAttempt {
    pub code: String,
    pub diagnostics: ParseDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub final_code: String,
    pub valid: bool,
    pub iterations_used: usize,
    /// Initial attempt first, then one entry per fixer call.
    pub history: Vec<RepairAttempt>,
}

/// What the fixer is asked to correct.
#[derive(Debug, Clone, Copy)]
pub struct FixRequest<'a> {
    pub key: &'a ReplyKey,
    pub code: &'a str,
    pub diagnostics: &'a ParseDiagnostics,
    /// 1-based fixer call number.
    pub iteration: usize,
}

pub trait Fixer: Send + Sync {
    /// Returns the raw model reply.
    fn fix(&self, req: &FixRequest<'_>) -> Result<String, VlmError>;
}

impl<F> Fixer for F
where
    F: Fn(&FixRequest<'_>) -> Result<String, VlmError> + Send + Sync,
{
    fn fix(&self, req: &FixRequest<'_>) -> Result<String, VlmError> {
        self(req)
    }
}

pub fn render_fixer_prompt(code: &str, diagnostics: &ParseDiagnostics) -> String {
    let width = code.lines().count().max(1).to_string().len();
    let numbered = code
        .lines()
        .enumerate()
        .map(|(i, l)| format!("{:>width$} | {l}", i + 1))
        .collect::<Vec<_>>()
        .join("\n");
    FIXER_PROMPT
        .trim_end()
        .replace("{diagnostics}", &diagnostics.to_string())
        .replace("{numbered_code}", &numbered)
}

/// Text-only fixer backed by a chat endpoint.
pub struct LiveFixer {
    client: Arc<ChatClient>,
    params: GenerationParams,
}

impl LiveFixer {
    pub fn new(client: Arc<ChatClient>, params: GenerationParams) -> Self {
        Self { client, params }
    }
}

impl Fixer for LiveFixer {
    fn fix(&self, req: &FixRequest<'_>) -> Result<String, VlmError> {
        let prompt = render_fixer_prompt(req.code, req.diagnostics);
        let reply = self
            .client
            .chat(FIXER_SYSTEM_PROMPT.trim_end(), &prompt, &[], &self.params)?;
        Ok(reply.raw_text)
    }
}

/// Serves `<root>/<id>/<condition>/run<k>.fix<i>.txt`.
#[derive(Debug, Clone)]
pub struct MockFixer {
    root: PathBuf,
}

impl MockFixer {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl Fixer for MockFixer {
    fn fix(&self, req: &FixRequest<'_>) -> Result<String, VlmError> {
        read_fixture(&self.root, req.key, &format!(".fix{}", req.iteration))
    }
}

pub fn repair_loop(code: &str, fixer: &dyn Fixer, key: &ReplyKey) -> RepairOutcome {
    let mut current = sanitize(code);
    let mut parser_diag = validate(&current);
    let mut history = vec![RepairAttempt {
        code: current.clone(),
        diagnostics: parser_diag.clone(),
    }];
    let mut iterations_used = 0;
    while !parser_diag.ok && iterations_used < MAX_REPAIR_ITERATIONS {
        iterations_used += 1;
        let req = FixRequest {
            key,
            code: &current,
            diagnostics: &parser_diag,
            iteration: iterations_used,
        };
        match fixer.fix(&req) {
            Ok(reply) => {
                current = sanitize(&extract_code_block(&reply));
                parser_diag = validate(&current);
                history.push(RepairAttempt {
                    code: current.clone(),
                    diagnostics: parser_diag.clone(),
                });
            }
            Err(e) => {
                log::warn!("{key}: fixer call {iterations_used} failed: {e}");
                // The candidate is unchanged; the next call retries it with
                // the parser's diagnostics.
                history.push(RepairAttempt {
                    code: current.clone(),
                    diagnostics: ParseDiagnostics::single(0, format!("fixer error: {e}")),
                });
            }
        }
    }
    RepairOutcome {
        final_code: current,
        valid: parser_diag.ok,
        iterations_used,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vlm::Condition;
    use std::fs;
    use std::sync::atomic::{AtomicUsize, Ordering};

    const FIG2: &str = include_str!("../tests/fixtures/fig2.mmd");
    const BROKEN: &str = "flowchart TD\nA[Start] -->\nB[End]";

    fn key() -> ReplyKey {
        ReplyKey::new("fig2", Condition::EdgeFlow, 1)
    }

    fn never(_: &FixRequest<'_>) -> Result<String, VlmError> {
        panic!("fixer must not be called")
    }

    #[test]
    fn valid_code_needs_no_fixer() {
        let out = repair_loop(FIG2, &never, &key());
        assert!(out.valid);
        assert_eq!(out.iterations_used, 0);
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.final_code, sanitize(FIG2));
    }

    #[test]
    fn first_fix_succeeds() {
        let fixer = |req: &FixRequest<'_>| {
            assert_eq!(req.iteration, 1);
            assert!(!req.diagnostics.ok);
            Ok::<_, VlmError>("```mermaid\nflowchart TD\nA[Start] --> B[End]\n```".to_string())
        };
        let out = repair_loop(BROKEN, &fixer, &key());
        assert!(out.valid);
        assert_eq!(out.iterations_used, 1);
        assert_eq!(out.history.len(), 2);
        assert_eq!(out.final_code, "flowchart TD\nA[Start] --> B[End]");
        assert!(validate(&out.final_code).ok);
    }

    #[test]
    fn echoing_fixer_hits_the_cap() {
        let calls = AtomicUsize::new(0);
        let fixer = |req: &FixRequest<'_>| {
            calls.fetch_add(1, Ordering::SeqCst);
            Ok::<_, VlmError>(req.code.to_string())
        };
        let out = repair_loop(BROKEN, &fixer, &key());
        assert!(!out.valid);
        assert_eq!(out.iterations_used, 10);
        assert_eq!(out.history.len(), 11);
        assert_eq!(calls.load(Ordering::SeqCst), 10);
        assert!(out.history.iter().all(|a| !a.diagnostics.ok));
    }

    #[test]
    fn transport_errors_count_as_iterations() {
        let calls = AtomicUsize::new(0);
        let fixer = |req: &FixRequest<'_>| {
            let n = calls.fetch_add(1, Ordering::SeqCst);
            // Parser diagnostics, not the previous fixer error, are resent.
            assert!(req.diagnostics.messages[0].line > 0);
            if n < 2 {
                Err(VlmError::Transport { attempts: 3, message: "down".into() })
            } else {
                Ok("flowchart TD\nA --> B".to_string())
            }
        };
        let out = repair_loop(BROKEN, &fixer, &key());
        assert!(out.valid);
        assert_eq!(out.iterations_used, 3);
        assert_eq!(out.history.len(), 4);
        assert!(out.history[1].diagnostics.messages[0].message.contains("fixer error"));
    }

    #[test]
    fn mock_fixer_reads_numbered_fixtures() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("fig2").join("edgeflow");
        fs::create_dir_all(&d).unwrap();
        fs::write(d.join("run1.fix1.txt"), "still broken -->").unwrap();
        fs::write(d.join("run1.fix2.txt"), "```mermaid\nflowchart TD\nA-->B\n```").unwrap();
        let out = repair_loop(BROKEN, &MockFixer::new(dir.path()), &key());
        assert!(out.valid);
        assert_eq!(out.iterations_used, 2);
    }

    #[test]
    fn missing_mock_fixtures_exhaust_the_cap() {
        let dir = tempfile::tempdir().unwrap();
        let out = repair_loop(BROKEN, &MockFixer::new(dir.path()), &key());
        assert!(!out.valid);
        assert_eq!(out.iterations_used, MAX_REPAIR_ITERATIONS);
        assert_eq!(out.final_code, sanitize(BROKEN));
    }

    #[test]
    fn prompt_carries_constraints_and_numbered_code() {
        let diag = validate(BROKEN);
        let p = render_fixer_prompt(BROKEN, &diag);
        assert!(p.contains("preserving the original business logic, node labels, and edge relationships"));
        assert!(p.contains("2 | A[Start] -->"));
        assert!(p.contains("line 2"));
        assert!(!p.contains("{diagnostics}"));
    }
}
