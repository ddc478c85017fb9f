use std::collections::BTreeMap;
use std::io::Read;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// Objective backed by a shell command.
///
/// Each evaluation runs in a fresh directory under `workdir`, writes
/// `params.json` (parameter name → value), substitutes `{params}` with the
/// path of that file and `{<name>}` with each value, runs the result through
/// `sh -c` and parses the last non-empty line of stdout as the objective
/// (maximized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCommand {
    pub template: String,
    pub parameters: Vec<String>,
    pub workdir: PathBuf,
    pub timeout_seconds: f64,
}

const POLL: Duration = Duration::from_millis(5);

impl ExternalCommand {
    pub fn render(&self, params_path: &Path, x: &[f64]) -> String {
        let mut cmd = self
            .template
            .replace("{params}", &params_path.display().to_string());
        for (name, v) in self.parameters.iter().zip(x) {
            cmd = cmd.replace(&format!("{{{name}}}"), &v.to_string());
        }
        cmd
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, EvalError> {
        if x.len() != self.parameters.len() {
            return Err(EvalError::Other(format!(
                "expected {} parameters, got {}",
                self.parameters.len(),
                x.len()
            )));
        }
        let spawn_err = |message: String| EvalError::Spawn {
            command: self.template.clone(),
            message,
        };
        std::fs::create_dir_all(&self.workdir).map_err(|e| spawn_err(e.to_string()))?;
        let dir = tempfile::Builder::new()
            .prefix("eval-")
            .tempdir_in(&self.workdir)
            .map_err(|e| spawn_err(e.to_string()))?;
        let params: BTreeMap<&str, f64> = self
            .parameters
            .iter()
            .map(String::as_str)
            .zip(x.iter().copied())
            .collect();
        let params_path = dir.path().join("params.json");
        let json = serde_json::to_string_pretty(&params).map_err(|e| spawn_err(e.to_string()))?;
        std::fs::write(&params_path, json).map_err(|e| spawn_err(e.to_string()))?;

        let command = self.render(&params_path, x);
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&command)
            .current_dir(dir.path())
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .process_group(0)
            .spawn()
            .map_err(|e| EvalError::Spawn {
                command: command.clone(),
                message: e.to_string(),
            })?;

        let drain = |pipe: Option<Box<dyn Read + Send>>| {
            thread::spawn(move || {
                let mut buf = Vec::new();
                if let Some(mut p) = pipe {
                    let _ = p.read_to_end(&mut buf);
                }
                String::from_utf8_lossy(&buf).into_owned()
            })
        };
        let out = drain(child.stdout.take().map(|p| Box::new(p) as Box<dyn Read + Send>));
        let err = drain(child.stderr.take().map(|p| Box::new(p) as Box<dyn Read + Send>));

        let deadline = Instant::now() + Duration::from_secs_f64(self.timeout_seconds.max(0.0));
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break Some(status),
                Ok(None) if Instant::now() >= deadline => {
                    // the shell's children share its process group
                    // SAFETY: signals only the process group created for this child
                    unsafe {
                        libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
                    }
                    let _ = child.kill();
                    let _ = child.wait();
                    break None;
                }
                Ok(None) => thread::sleep(POLL),
                Err(e) => {
                    return Err(EvalError::Spawn {
                        command,
                        message: e.to_string(),
                    })
                }
            }
        };
        let stdout = out.join().unwrap_or_default();
        let stderr = err.join().unwrap_or_default();

        let Some(status) = status else {
            return Err(EvalError::Timeout {
                seconds: self.timeout_seconds,
                stdout,
                stderr,
            });
        };
        if !status.success() {
            return Err(EvalError::ExitStatus {
                code: status.code(),
                stdout,
                stderr,
            });
        }
        let line = stdout
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .last()
            .unwrap_or("")
            .to_string();
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(EvalError::Unparseable { line, stdout, stderr }),
        }
    }
}
