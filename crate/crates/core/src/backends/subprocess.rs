//! Line-protocol entity extractor running as a child process.
//!
//! For every sentence the parent writes one line (newlines replaced by
//! spaces) to the child's stdin and reads back one line of tab-separated
//! entity mentions. An empty line means no entities.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use super::{BackendError, EntityExtractor};

struct Pipes {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

pub struct SubprocessExtractor {
    command: Vec<String>,
    pipes: Mutex<Pipes>,
}

impl SubprocessExtractor {
    pub fn spawn(command: &[String]) -> Result<Self, BackendError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| BackendError::Config("empty extractor command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BackendError::Extractor(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(Self {
            command: command.to_vec(),
            pipes: Mutex::new(Pipes {
                child,
                stdin: BufWriter::new(stdin),
                stdout: BufReader::new(stdout),
            }),
        })
    }
}

impl EntityExtractor for SubprocessExtractor {
    fn id(&self) -> String {
        format!("subprocess:{}", self.command.join(" "))
    }

    fn extract(&self, sentence: &str) -> Result<Vec<String>, BackendError> {
        let line: String = sentence
            .chars()
            .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
            .collect();
        let mut pipes = self.pipes.lock().unwrap_or_else(|e| e.into_inner());
        let io = |e: std::io::Error| BackendError::Extractor(e.to_string());
        writeln!(pipes.stdin, "{line}").map_err(io)?;
        pipes.stdin.flush().map_err(io)?;
        let mut reply = String::new();
        if pipes.stdout.read_line(&mut reply).map_err(io)? == 0 {
            return Err(BackendError::Extractor("extractor closed its output".into()));
        }
        Ok(reply
            .trim_end_matches(['\n', '\r'])
            .split('\t')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect())
    }
}

impl Drop for SubprocessExtractor {
    fn drop(&mut self) {
        let pipes = self.pipes.get_mut().unwrap_or_else(|e| e.into_inner());
        let _ = pipes.child.kill();
        let _ = pipes.child.wait();
    }
}
