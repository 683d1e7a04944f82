//! Drives a chat-completion endpoint through a six-step plan-and-solve
//! prompt sequence to draft a Solidity contract from a legal text.
//!
//! The harness only collects drafts. Turning a draft into a `.pnet` model,
//! and choosing among drafts, is left to a person.

use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable consulted for the endpoint URL.
pub const ENDPOINT_ENV: &str = "CONTRACTCHECK_ENDPOINT";

pub const PREAMBLE: &str =
    "Your task is to help create a Solidity smart contract based on a provided legal contract. \
The process will involve several steps where you will analyze different aspects of the legal contract, \
document key elements and necessary assumptions, and then, in the final step, generate the Solidity code. \
Each step will focus on a specific part of the contract to ensure clarity and manage complexity effectively.";

pub const STEP_TITLES: [&str; 5] = [
    "Step 1: Contract Parties, Powers, and Obligations",
    "Step 2: Triggers and Timeframes",
    "Step 3: Penalties and Dispute Resolution",
    "Step 4: Legal and Security Compliance",
    "Step 5: Smart Contract Generation",
];

const STEP_1: &str = "Analyze the provided legal contract. Identify and list:
1. The parties involved.
2. Their powers and obligations.
Document any assumptions or interpretations necessary for understanding these elements. Here is the legal contract:

\"\"\"
{contract}
\"\"\"";

const STEP_2: &str = "Based on the previously identified parties, powers and obligations, now focus on:
1. Events that trigger actions within the contract.
2. Timeframes and deadlines relevant to these events, powers, and obligations. Note any interpretations or assumptions related to these triggers and timeframes.";

const STEP_3: &str = "Continuing from the triggers and timeframes, identify:
1. Any penalties for non-compliance or breaches.
2. Dispute resolution mechanisms specified in the contract.
List assumptions or clarifications needed for implementing these features in the smart contract.";

const STEP_4: &str = "Before generating the code, ensure the smart contract meets legal and security standards:
1. Discuss potential legal issues and how they can be addressed in the Solidity code.
2. Identify necessary security features and error handling mechanisms to make the smart contract robust and secure.
Document all assumptions and legal considerations.";

const STEP_5: &str = "Now, compile all the information and insights gathered from previous discussions into a concise and efficient Solidity smart contract. The code should:
1. Be structured clearly with defined sections for parties, powers, obligations, triggers, and dispute resolutions.
2. Include essential comments that clarify sections and key functions for future reference.
3. Ensure legal and technical compliance as discussed, focusing on functional accuracy and security features.
Generate the smart contract code with minimal additional commentary, keeping it focused and lean. Provide brief inline comments only where necessary to explain complex logic or important compliance elements.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prompt {
    /// `None` for the preamble.
    pub title: Option<&'static str>,
    pub body: String,
}

impl Prompt {
    /// The message sent to the model.
    pub fn text(&self) -> String {
        match self.title {
            Some(title) => format!("{title}\n{}", self.body),
            None => self.body.clone(),
        }
    }
}

/// The preamble followed by the five steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptSequence {
    pub prompts: Vec<Prompt>,
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("the legal contract text is empty")]
    EmptyContract,
    #[error("endpoint error: {0}")]
    EndpointError(String),
    #[error("no code block in the final answer after {attempts} attempts")]
    NoCodeProduced { attempts: u32 },
    #[error("run directory `{path}`: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Builds the prompt sequence, placing `contract_text` verbatim between the
/// quote fences of step 1.
pub fn render_prompts(contract_text: &str) -> Result<PromptSequence, GenError> {
    if contract_text.trim().is_empty() {
        return Err(GenError::EmptyContract);
    }
    let bodies = [
        STEP_1.replacen("{contract}", contract_text, 1),
        STEP_2.into(),
        STEP_3.into(),
        STEP_4.into(),
        STEP_5.into(),
    ];
    let mut prompts = vec![Prompt {
        title: None,
        body: PREAMBLE.to_string(),
    }];
    prompts.extend(STEP_TITLES.iter().zip(bodies).map(|(&title, body)| Prompt {
        title: Some(title),
        body,
    }));
    Ok(PromptSequence { prompts })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationConfig {
    /// Full URL of the chat-completion resource.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
    pub max_attempts: u32,
    /// Per-request timeout.
    pub timeout: Duration,
    /// Advertised to the endpoint only as documentation of intent; the
    /// harness does not count tokens.
    pub context_length: u32,
}

impl GenerationConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        GenerationConfig {
            endpoint: endpoint.into(),
            model: "default".into(),
            temperature: 0.8,
            top_p: 0.9,
            top_k: 40,
            max_attempts: 3,
            timeout: Duration::from_secs(300),
            context_length: 131_072,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// Request body posted to the endpoint.
#[derive(Debug, Clone, Serialize)]
pub struct ChatRequest<'a> {
    pub model: &'a str,
    pub messages: &'a [ChatMessage],
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ChatResponse {
    pub choices: Vec<ChatChoice>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ChatChoice {
    pub message: ChatMessage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    Code,
    NoCode,
    EndpointError,
}

/// One line of the attempt log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttemptRecord {
    pub attempt: u32,
    pub outcome: AttemptOutcome,
    /// Assistant replies received, in order.
    pub responses: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    pub code: String,
    /// Info string of the extracted fence, if any.
    pub language: Option<String>,
    pub attempts: Vec<AttemptRecord>,
}

/// Contents of the last fenced code block in `text`, with its info string.
pub fn extract_final_code_block(text: &str) -> Option<(Option<String>, String)> {
    let mut last = None;
    let mut open: Option<(Option<String>, Vec<&str>)> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        match &mut open {
            None => {
                if let Some(info) = trimmed.strip_prefix("```") {
                    let info = info.trim();
                    open = Some(((!info.is_empty()).then(|| info.to_string()), Vec::new()));
                }
            }
            Some((lang, body)) => {
                if trimmed.trim_end() == "```" {
                    let code = body.join("\n");
                    if !code.trim().is_empty() {
                        last = Some((lang.take(), code));
                    }
                    open = None;
                } else {
                    body.push(line);
                }
            }
        }
    }
    last
}

/// Where a run's artifacts go: the prompts, every reply, the append-only
/// `attempts.jsonl` log and the extracted code.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, GenError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| GenError::Io {
            path: root.clone(),
            source,
        })?;
        Ok(RunDir { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn log_path(&self) -> PathBuf {
        self.root.join("attempts.jsonl")
    }

    fn write(&self, name: &str, text: &str) -> Result<(), GenError> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| GenError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, text).map_err(|source| GenError::Io { path, source })
    }

    fn append_log(&self, record: &AttemptRecord) -> Result<(), GenError> {
        let path = self.log_path();
        let line = serde_json::to_string(record).expect("attempt records serialize");
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .and_then(|mut f| writeln!(f, "{line}"))
            .map_err(|source| GenError::Io { path, source })
    }
}

enum Failure {
    /// Not worth retrying, such as a rejected request.
    Fatal(String),
    Retry(String),
}

fn chat(agent: &ureq::Agent, config: &GenerationConfig, messages: &[ChatMessage]) -> Result<String, Failure> {
    let request = ChatRequest {
        model: &config.model,
        messages,
        temperature: config.temperature,
        top_p: config.top_p,
        top_k: config.top_k,
    };
    let mut response = agent
        .post(&config.endpoint)
        .send_json(&request)
        .map_err(|e| Failure::Retry(e.to_string()))?;
    let status = response.status().as_u16();
    if !(200..300).contains(&status) {
        let message = format!("HTTP {status} from {}", config.endpoint);
        return Err(
            if (400..500).contains(&status) && status != 408 && status != 429 {
                Failure::Fatal(message)
            } else {
                Failure::Retry(message)
            },
        );
    }
    let body: ChatResponse = response
        .body_mut()
        .read_json()
        .map_err(|e| Failure::Retry(format!("malformed response: {e}")))?;
    body.choices
        .into_iter()
        .next()
        .map(|c| c.message.content)
        .ok_or_else(|| Failure::Retry("response has no choices".into()))
}

/// Runs the prompt sequence as one conversation, retrying the whole
/// conversation when the final reply has no code block or the endpoint
/// fails transiently, up to `config.max_attempts` times.
pub fn generate_candidate(
    config: &GenerationConfig,
    contract_text: &str,
    run_dir: Option<&RunDir>,
) -> Result<Generation, GenError> {
    let prompts = render_prompts(contract_text)?;
    if let Some(dir) = run_dir {
        for (i, p) in prompts.prompts.iter().enumerate() {
            dir.write(&format!("prompts/{i}.txt"), &p.text())?;
        }
    }
    let agent = ureq::Agent::new_with_config(
        ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build(),
    );

    let mut attempts = Vec::new();
    let mut last_failure = None;
    for attempt in 1..=config.max_attempts.max(1) {
        let mut messages: Vec<ChatMessage> = Vec::new();
        let mut responses = Vec::new();
        let mut error = None;
        let mut fatal = false;
        for p in &prompts.prompts {
            messages.push(ChatMessage {
                role: "user".into(),
                content: p.text(),
            });
            match chat(&agent, config, &messages) {
                Ok(reply) => {
                    if let Some(dir) = run_dir {
                        dir.write(
                            &format!("attempt-{attempt}/response-{}.md", responses.len()),
                            &reply,
                        )?;
                    }
                    messages.push(ChatMessage {
                        role: "assistant".into(),
                        content: reply.clone(),
                    });
                    responses.push(reply);
                }
                Err(Failure::Fatal(e)) => {
                    (error, fatal) = (Some(e), true);
                    break;
                }
                Err(Failure::Retry(e)) => {
                    error = Some(e);
                    break;
                }
            }
        }

        let code = if error.is_none() {
            responses.last().and_then(|r| extract_final_code_block(r))
        } else {
            None
        };
        let outcome = match (&code, &error) {
            (Some(_), _) => AttemptOutcome::Code,
            (None, Some(_)) => AttemptOutcome::EndpointError,
            (None, None) => AttemptOutcome::NoCode,
        };
        let record = AttemptRecord {
            attempt,
            outcome,
            responses,
            error: error.clone(),
        };
        if let Some(dir) = run_dir {
            dir.append_log(&record)?;
        }
        attempts.push(record);

        if let Some((language, code)) = code {
            if let Some(dir) = run_dir {
                dir.write(&format!("candidate.{}", extension(language.as_deref())), &code)?;
            }
            return Ok(Generation {
                code,
                language,
                attempts,
            });
        }
        last_failure = error;
        if fatal {
            break;
        }
    }
    Err(match last_failure {
        Some(e) => GenError::EndpointError(e),
        None => GenError::NoCodeProduced {
            attempts: attempts.len() as u32,
        },
    })
}

fn extension(language: Option<&str>) -> &'static str {
    match language.map(str::to_ascii_lowercase).as_deref() {
        Some("solidity" | "sol") => "sol",
        _ => "txt",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompts_embed_the_contract_once() {
        let seq = render_prompts("The parties agree.").unwrap();
        assert_eq!(seq.prompts.len(), 6);
        assert!(seq.prompts[0].title.is_none());
        assert!(seq.prompts[1]
            .text()
            .contains("\"\"\"\nThe parties agree.\n\"\"\""));
        assert_eq!(
            seq.prompts
                .iter()
                .filter(|p| p.text().contains("The parties agree."))
                .count(),
            1
        );
        for (p, title) in seq.prompts[1..].iter().zip(STEP_TITLES) {
            assert!(p.text().starts_with(title));
        }
    }

    #[test]
    fn placeholder_text_in_the_contract_is_left_alone() {
        let seq = render_prompts("see {contract}").unwrap();
        assert!(seq.prompts[1].body.contains("see {contract}"));
    }

    #[test]
    fn empty_contract() {
        assert!(matches!(render_prompts(" \n"), Err(GenError::EmptyContract)));
    }

    #[test]
    fn last_code_block_wins() {
        let text = "intro\n```solidity\ncontract A {}\n```\nmore\n```\ncontract B {}\n```\n";
        assert_eq!(
            extract_final_code_block(text),
            Some((None, "contract B {}".into()))
        );
        assert_eq!(extract_final_code_block("no code"), None);
        assert_eq!(extract_final_code_block("```sol\n\n```"), None);
        assert_eq!(extract_final_code_block("```sol\nunterminated"), None);
        assert_eq!(
            extract_final_code_block("```solidity\npragma solidity ^0.8.0;\n```"),
            Some((Some("solidity".into()), "pragma solidity ^0.8.0;".into()))
        );
    }

    #[test]
    fn defaults() {
        let c = GenerationConfig::new("http://localhost:1/v1/chat/completions");
        assert_eq!(
            (c.temperature, c.top_p, c.top_k, c.max_attempts),
            (0.8, 0.9, 40, 3)
        );
        assert_eq!(c.context_length, 131_072);
    }
}
