//! External simulator protocol.
//!
//! The simulator is a shell command run once per batch. It reads one line of
//! `d` space-separated physical coordinates per point on standard input and
//! writes one real number per line on standard output, in the same order.

use std::io::Write;
use std::process::{Command, Stdio};

use crate::config::Failure;

fn format_point(x: &[f64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Runs `command` on `points` and returns one output per point.
pub fn run(command: &str, points: &[Vec<f64>]) -> Result<Vec<f64>, Failure> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let mut input = String::new();
    for p in points {
        input.push_str(&format_point(p));
        input.push('\n');
    }
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Failure::Simulator(format!("cannot start {command:?}: {e}")))?;

    let mut stdin = child.stdin.take().expect("stdin is piped");
    let writer = std::thread::spawn(move || {
        // A simulator that exits early closes the pipe; its exit status
        // reports the problem.
        let _ = stdin.write_all(input.as_bytes());
    });
    let out = child
        .wait_with_output()
        .map_err(|e| Failure::Simulator(format!("waiting for {command:?}: {e}")))?;
    let _ = writer.join();

    if !out.status.success() {
        let stderr = String::from_utf8_lossy(&out.stderr);
        return Err(Failure::Simulator(format!(
            "{command:?} exited with {} on a batch of {} points starting at ({}){}",
            out.status,
            points.len(),
            format_point(&points[0]),
            if stderr.trim().is_empty() {
                String::new()
            } else {
                format!(": {}", stderr.trim())
            }
        )));
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut values = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let line = lines.get(i).ok_or_else(|| {
            Failure::Simulator(format!(
                "{command:?} returned {} values for {} points; no output for point {} ({})",
                lines.len(),
                points.len(),
                i + 1,
                format_point(p)
            ))
        })?;
        let y = line.trim().parse::<f64>().ok().filter(|y| y.is_finite()).ok_or_else(|| {
            Failure::Simulator(format!(
                "{command:?} output line {} ({:?}) is not a finite number, for point ({})",
                i + 1,
                line.trim(),
                format_point(p)
            ))
        })?;
        values.push(y);
    }
    if lines.len() > points.len() {
        return Err(Failure::Simulator(format!(
            "{command:?} returned {} values for {} points",
            lines.len(),
            points.len()
        )));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_a_shell_pipeline() {
        let pts = vec![vec![1.0, 2.0], vec![3.5, -1.0]];
        let ys = run("awk '{print $1 + $2}'", &pts).unwrap();
        assert_eq!(ys, vec![3.0, 2.5]);
    }

    #[test]
    fn empty_batch_skips_the_command() {
        assert!(run("exit 1", &[]).unwrap().is_empty());
    }

    #[test]
    fn failures_name_the_offending_point() {
        let pts = vec![vec![1.0], vec![2.0]];
        let err = run("exit 7", &pts).unwrap_err().to_string();
        assert!(err.contains("exit status: 7"), "{err}");
        let err = run("echo 1; echo nan", &pts).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("(2)"), "{err}");
        let err = run("echo 1", &pts).unwrap_err().to_string();
        assert!(err.contains("point 2"), "{err}");
        let err = run("printf '1\\n2\\n3\\n'", &pts).unwrap_err().to_string();
        assert!(err.contains("3 values for 2 points"), "{err}");
    }
}
