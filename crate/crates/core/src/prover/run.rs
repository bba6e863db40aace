//! External prover execution.

use std::io::{Read, Write};
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::Deserialize;

use super::Verdict;

#[derive(Debug, Deserialize)]
struct RawConfig {
    id: String,
    command: String,
    timeout: f64,
    #[serde(default)]
    patterns: Vec<RawPattern>,
}

#[derive(Debug, Deserialize)]
struct RawPattern {
    regex: String,
    verdict: Verdict,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error("command template must contain {{file}}")]
    MissingFilePlaceholder,
    #[error("timeout must be positive, got {0}")]
    Timeout(f64),
    #[error("pattern `{pattern}`: {source}")]
    Regex {
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error("pattern `{0}` maps to {1}; only Valid, Invalid and Unknown may be matched")]
    Verdict(String, Verdict),
}

/// An external prover: shell command template, time limit and output classifier.
///
/// ```toml
/// id = "alt-ergo"
/// command = "alt-ergo --timelimit {timeout} {file}"
/// timeout = 2.0
///
/// [[patterns]]
/// regex = "^Valid"
/// verdict = "Valid"
/// ```
#[derive(Clone, Debug)]
pub struct ProverConfig {
    pub id: String,
    pub command: String,
    pub timeout: Duration,
    /// Checked in order; the first match decides.
    pub patterns: Vec<(Regex, Verdict)>,
}

impl ProverConfig {
    pub fn from_toml(text: &str) -> Result<ProverConfig, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        if !raw.command.contains("{file}") {
            return Err(ConfigError::MissingFilePlaceholder);
        }
        if !(raw.timeout.is_finite() && raw.timeout > 0.0) {
            return Err(ConfigError::Timeout(raw.timeout));
        }
        let patterns = raw
            .patterns
            .into_iter()
            .map(|p| {
                if !matches!(p.verdict, Verdict::Valid | Verdict::Invalid | Verdict::Unknown) {
                    return Err(ConfigError::Verdict(p.regex, p.verdict));
                }
                Regex::new(&p.regex)
                    .map(|r| (r, p.verdict))
                    .map_err(|source| ConfigError::Regex {
                        pattern: p.regex,
                        source,
                    })
            })
            .collect::<Result<_, _>>()?;
        Ok(ProverConfig {
            id: raw.id,
            command: raw.command,
            timeout: Duration::from_secs_f64(raw.timeout),
            patterns,
        })
    }

    pub fn load(path: &Path) -> Result<ProverConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ProverConfig::from_toml(&text)
    }

    pub fn classify(&self, output: &str) -> Verdict {
        self.patterns
            .iter()
            .find(|(r, _)| r.is_match(output))
            .map_or(Verdict::ToolError, |(_, v)| *v)
    }
}

#[derive(Clone, Debug)]
pub struct ProverRun {
    pub verdict: Verdict,
    pub duration: Duration,
    /// Captured stdout followed by stderr, or the spawn error.
    pub output: String,
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

fn drain(mut r: impl Read + Send + 'static) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = r.read_to_end(&mut buf);
        buf
    })
}

/// Writes `theory` to a temporary file and runs the prover on it in its own
/// process group. The group is killed when the time limit expires.
pub fn run_prover(theory: &str, cfg: &ProverConfig) -> std::io::Result<ProverRun> {
    let mut file = tempfile::Builder::new().prefix("obsel-").suffix(".why").tempfile()?;
    file.write_all(theory.as_bytes())?;
    file.flush()?;
    let command = cfg
        .command
        .replace("{file}", &shell_quote(&file.path().display().to_string()))
        .replace("{timeout}", &cfg.timeout.as_secs_f64().ceil().to_string());

    let start = Instant::now();
    let spawned = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0)
        .spawn();
    let mut child = match spawned {
        Ok(c) => c,
        Err(e) => {
            return Ok(ProverRun {
                verdict: Verdict::ToolError,
                duration: start.elapsed(),
                output: format!("failed to start `{command}`: {e}"),
            })
        }
    };
    let stdout = drain(child.stdout.take().expect("piped"));
    let stderr = drain(child.stderr.take().expect("piped"));

    let deadline = start + cfg.timeout;
    let mut timed_out = false;
    loop {
        if child.try_wait()?.is_some() {
            break;
        }
        if Instant::now() >= deadline {
            // SAFETY: kill(2) with a negative pid signals the child's own process group.
            unsafe {
                libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
            }
            child.wait()?;
            timed_out = true;
            break;
        }
        thread::sleep(Duration::from_millis(5));
    }
    let duration = start.elapsed();
    let mut output = String::from_utf8_lossy(&stdout.join().unwrap_or_default()).into_owned();
    output.push_str(&String::from_utf8_lossy(&stderr.join().unwrap_or_default()));
    let verdict = if timed_out {
        Verdict::Timeout
    } else {
        cfg.classify(&output)
    };
    Ok(ProverRun {
        verdict,
        duration,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: &str, timeout: f64, patterns: &[(&str, &str)]) -> ProverConfig {
        let mut text = format!("id = \"t\"\ncommand = {command:?}\ntimeout = {timeout:?}\n");
        for (r, v) in patterns {
            text.push_str(&format!("[[patterns]]\nregex = {r:?}\nverdict = \"{v}\"\n"));
        }
        ProverConfig::from_toml(&text).unwrap()
    }

    #[test]
    fn catch_all_unknown() {
        let c = cfg("true {file}", 5.0, &[("", "Unknown")]);
        assert_eq!(run_prover("theory T\nend\n", &c).unwrap().verdict, Verdict::Unknown);
    }

    #[test]
    fn unmatched_output_is_tool_error() {
        let c = cfg("echo hello {file}", 5.0, &[("^Valid", "Valid")]);
        let run = run_prover("", &c).unwrap();
        assert_eq!(run.verdict, Verdict::ToolError);
        assert!(run.output.contains("hello"));
    }

    #[test]
    fn reads_the_theory_file() {
        let c = cfg(
            "grep -q 'goal g' {file} && echo Valid || echo Unknown",
            5.0,
            &[("Valid", "Valid"), ("Unknown", "Unknown")],
        );
        assert_eq!(run_prover("goal g : true\n", &c).unwrap().verdict, Verdict::Valid);
        assert_eq!(run_prover("axiom a : true\n", &c).unwrap().verdict, Verdict::Unknown);
    }

    #[test]
    fn first_pattern_wins() {
        let c = cfg(
            "echo Invalid Valid; : {file}",
            5.0,
            &[("Invalid", "Invalid"), ("Valid", "Valid")],
        );
        assert_eq!(run_prover("", &c).unwrap().verdict, Verdict::Invalid);
    }

    #[test]
    fn timeout_kills_process_group() {
        let c = cfg("sleep 30 & sleep 30; : {file}", 0.5, &[("", "Valid")]);
        let run = run_prover("", &c).unwrap();
        assert_eq!(run.verdict, Verdict::Timeout);
        assert!(run.duration < Duration::from_secs(1), "{:?}", run.duration);
        assert!(run.duration >= Duration::from_millis(500));
    }

    #[test]
    fn config_validation() {
        let bad = |t: &str| ProverConfig::from_toml(t).is_err();
        assert!(bad("id = \"x\"\ncommand = \"prove\"\ntimeout = 1.0\n"));
        assert!(bad("id = \"x\"\ncommand = \"p {file}\"\ntimeout = 0.0\n"));
        assert!(bad(
            "id = \"x\"\ncommand = \"p {file}\"\ntimeout = 1.0\n[[patterns]]\nregex = \"(\"\nverdict = \"Valid\"\n"
        ));
        assert!(bad(
            "id = \"x\"\ncommand = \"p {file}\"\ntimeout = 1.0\n[[patterns]]\nregex = \"t\"\nverdict = \"Timeout\"\n"
        ));
        assert!(bad(
            "id = \"x\"\ncommand = \"p {file}\"\ntimeout = 1.0\n[[patterns]]\nregex = \"t\"\nverdict = \"Maybe\"\n"
        ));
    }
}
