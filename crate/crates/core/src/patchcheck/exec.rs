//! Test execution adapters and the function-generation probe file.
//!
//! The probe is written to `repogym_probe.py` at the workspace root before the
//! test command runs and removed afterwards. It copies the target module's
//! namespace into its own globals, then defines the agent's implementation as a
//! module-level function named `<name>_new_implementation`. The command sees
//! `REPOGYM_PROBE`, `REPOGYM_TARGET` and `REPOGYM_FUNC` in its environment.

use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

pub const PROBE_FILE: &str = "repogym_probe.py";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutcome {
    /// `None` when the process was killed (timeout or signal).
    pub exit_status: Option<i32>,
    pub output: String,
    pub timed_out: bool,
}

impl ExecOutcome {
    pub fn passed(&self) -> bool {
        self.exit_status == Some(0)
    }
}

pub trait ExecAdapter: Sync {
    fn run(
        &self,
        working_dir: &Path,
        command: &str,
        env: &[(&str, &str)],
        timeout: Duration,
    ) -> Result<ExecOutcome>;
}

/// Runs commands through `sh -c`.
#[derive(Debug, Clone, Default)]
pub struct ShellAdapter;

fn drain(mut pipe: impl Read + Send + 'static) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = pipe.read_to_end(&mut buf);
        buf
    })
}

impl ExecAdapter for ShellAdapter {
    fn run(
        &self,
        working_dir: &Path,
        command: &str,
        env: &[(&str, &str)],
        timeout: Duration,
    ) -> Result<ExecOutcome> {
        let mut cmd = Command::new("sh");
        #[cfg(unix)]
        std::os::unix::process::CommandExt::process_group(&mut cmd, 0);
        let mut child = cmd
            .arg("-c")
            .arg(command)
            .current_dir(working_dir)
            .envs(env.iter().copied())
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Exec(format!("cannot start sh: {e}")))?;
        let out = drain(child.stdout.take().expect("stdout is piped"));
        let err = drain(child.stderr.take().expect("stderr is piped"));
        let started = Instant::now();
        let mut timed_out = false;
        let status = loop {
            if let Some(status) = child.try_wait().map_err(|e| Error::Exec(e.to_string()))? {
                break status;
            }
            if started.elapsed() >= timeout {
                timed_out = true;
                // Kill the whole group so grandchildren release the pipes.
                #[cfg(unix)]
                let _ = Command::new("kill")
                    .args(["-KILL", "--", &format!("-{}", child.id())])
                    .status();
                let _ = child.kill();
                break child.wait().map_err(|e| Error::Exec(e.to_string()))?;
            }
            thread::sleep(Duration::from_millis(5));
        };
        let mut output = out.join().unwrap_or_default();
        output.extend(err.join().unwrap_or_default());
        Ok(ExecOutcome {
            exit_status: if timed_out { None } else { status.code() },
            output: String::from_utf8_lossy(&output).into_owned(),
            timed_out,
        })
    }
}

/// Probe source for an implementation: `signature` and `body` are verbatim
/// from the edited file, at the definition's original indentation. `module`
/// is the dotted name of the target file.
pub fn probe_source(module: &str, name: &str, signature: &str, body: &str) -> Option<String> {
    let indent: String = signature
        .chars()
        .take_while(|c| *c == ' ' || *c == '\t')
        .collect();
    let def_at = signature.find("def")?;
    let after_def = &signature[def_at + 3..];
    let gap = after_def.len() - after_def.trim_start().len();
    let name_at = def_at + 3 + gap;
    if !signature[name_at..].starts_with(name) {
        return None;
    }
    let renamed = format!(
        "{}{name}_new_implementation{}",
        &signature[..name_at],
        &signature[name_at + name.len()..]
    );
    let dedent = |line: &str| {
        line.strip_prefix(indent.as_str())
            .unwrap_or(line)
            .to_string()
    };
    let mut out = String::new();
    out.push_str("import importlib\n\nglobals().update(\n");
    out.push_str(&format!(
        "    {{k: v for k, v in vars(importlib.import_module({module:?})).items() if not k.startswith(\"__\")}}\n"
    ));
    out.push_str(")\n\n\n");
    for line in renamed.lines() {
        out.push_str(&dedent(line));
        out.push('\n');
    }
    for line in body.split_inclusive('\n') {
        let line = line.strip_suffix('\n').unwrap_or(line);
        out.push_str(&dedent(line));
        out.push('\n');
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_exit_codes_and_env() {
        let dir = tempfile::tempdir().unwrap();
        let ok = ShellAdapter
            .run(
                dir.path(),
                "echo $X",
                &[("X", "hi")],
                Duration::from_secs(10),
            )
            .unwrap();
        assert!(ok.passed());
        assert_eq!(ok.output, "hi\n");
        let bad = ShellAdapter
            .run(dir.path(), "exit 3", &[], Duration::from_secs(10))
            .unwrap();
        assert_eq!(bad.exit_status, Some(3));
    }

    #[test]
    fn timeout_kills() {
        let dir = tempfile::tempdir().unwrap();
        let r = ShellAdapter
            .run(dir.path(), "sleep 5", &[], Duration::from_millis(100))
            .unwrap();
        assert!(r.timed_out && !r.passed());
    }

    #[test]
    fn probe_renames_and_dedents() {
        let src = probe_source(
            "pkg.a",
            "run",
            "    def run(self, x):",
            "        return x\n",
        )
        .unwrap();
        assert_eq!(
            src,
            "import importlib\n\nglobals().update(\n    {k: v for k, v in vars(importlib.import_module(\"pkg.a\")).items() if not k.startswith(\"__\")}\n)\n\n\ndef run_new_implementation(self, x):\n    return x\n"
        );
        assert!(probe_source("m", "run", "def other():", "").is_none());
    }
}
