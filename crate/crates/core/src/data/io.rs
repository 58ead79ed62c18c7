//! Text motion file format:
//!
//! ```text
//! MOTION v1
//! joints=<J> rate=<hz> frames=<F> label=<tag>
//! <3·J space-separated coordinates>   (F lines, joint-major x1 y1 z1 x2 ...)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::data::pose::{MotionSequence, Pose};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &str = "MOTION v1";

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn load_motion_file<T: Scalar>(path: impl AsRef<Path>) -> Result<MotionSequence<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_motion(&text)
}

pub fn save_motion_file<T: Scalar>(path: impl AsRef<Path>, seq: &MotionSequence<T>) -> Result<()> {
    std::fs::write(path, format_motion(seq))?;
    Ok(())
}

pub fn parse_motion<T: Scalar>(text: &str) -> Result<MotionSequence<T>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.trim() == MAGIC => {}
        _ => return Err(perr(1, format!("expected header `{MAGIC}`"))),
    }
    let header = lines.next().ok_or_else(|| perr(2, "missing joints/rate/frames/label line"))?;

    let mut joints = None;
    let mut rate = None;
    let mut frames = None;
    let mut label = None;
    for tok in header.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| perr(2, format!("malformed header field `{tok}`")))?;
        match k {
            "joints" => joints = Some(v.parse::<usize>().map_err(|_| perr(2, "bad joints value"))?),
            "rate" => rate = Some(v.parse::<T>().map_err(|_| perr(2, "bad rate value"))?),
            "frames" => frames = Some(v.parse::<usize>().map_err(|_| perr(2, "bad frames value"))?),
            "label" => label = Some(v.to_string()),
            other => return Err(perr(2, format!("unknown header field `{other}`"))),
        }
    }
    let joints = joints.filter(|&j| j > 0).ok_or_else(|| perr(2, "missing or zero joints"))?;
    let rate = rate
        .filter(|r| *r > T::zero() && r.is_finite())
        .ok_or_else(|| perr(2, "missing or non-positive rate"))?;
    let n_frames = frames.filter(|&f| f > 0).ok_or_else(|| perr(2, "missing or zero frames"))?;
    let label = label.unwrap_or_default();

    let mut poses = Vec::with_capacity(n_frames);
    for (i, line) in lines.enumerate() {
        let line_no = i + 3;
        let frame_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if poses.len() == n_frames {
            return Err(perr(line_no, format!("more than the declared {n_frames} frames")));
        }
        let mut coords = Vec::with_capacity(3 * joints);
        for (c, tok) in line.split_whitespace().enumerate() {
            let v: T = tok.parse().map_err(|_| {
                perr(line_no, format!("frame {frame_no}: coordinate {} `{tok}` is not a number", c + 1))
            })?;
            if !v.is_finite() {
                let axis = ["x", "y", "z"][c % 3];
                return Err(perr(
                    line_no,
                    format!(
                        "frame {frame_no}: coordinate {} (joint {} {axis}) is not finite",
                        c + 1,
                        c / 3 + 1
                    ),
                ));
            }
            coords.push(v);
        }
        if coords.len() != 3 * joints {
            return Err(perr(
                line_no,
                format!(
                    "frame {frame_no} has {} coordinates ({} joints), expected {} joints",
                    coords.len(),
                    coords.len() as f64 / 3.0,
                    joints
                ),
            ));
        }
        poses.push(Pose::from_coords(coords)?);
    }
    if poses.len() != n_frames {
        return Err(perr(
            poses.len() + 3,
            format!("declared {n_frames} frames but found {}", poses.len()),
        ));
    }
    MotionSequence::new(poses, rate, label)
}

pub fn format_motion<T: Scalar>(seq: &MotionSequence<T>) -> String {
    let mut out = String::new();
    let label = if seq.label.is_empty() { "-" } else { seq.label.as_str() };
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(
        out,
        "joints={} rate={} frames={} label={}",
        seq.n_joints(),
        seq.frame_rate_hz,
        seq.len(),
        label
    )
    .unwrap();
    for f in &seq.frames {
        let mut first = true;
        for c in f.coords() {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file_with(n_frames: usize, joints: usize, mut line: impl FnMut(usize) -> String) -> String {
        let mut s = format!("MOTION v1\njoints={joints} rate=25 frames={n_frames} label=walking\n");
        for i in 0..n_frames {
            s.push_str(&line(i));
            s.push('\n');
        }
        s
    }

    fn row(joints: usize, v: f64) -> String {
        vec![format!("{v}"); 3 * joints].join(" ")
    }

    #[test]
    fn well_formed_file_echoes() {
        let text = file_with(100, 17, |i| row(17, i as f64 * 0.01));
        let seq: MotionSequence = parse_motion(&text).unwrap();
        assert_eq!(seq.len(), 100);
        assert_eq!(seq.n_joints(), 17);
        assert_eq!(seq.frame_rate_hz, 25.0);
        assert_eq!(seq.label, "walking");
        assert_eq!(seq.frames[3].coords()[0], 0.03);
    }

    #[test]
    fn short_frame_names_frame_seven() {
        let text = file_with(10, 17, |i| if i == 6 { row(16, 0.0) } else { row(17, 0.0) });
        let err = parse_motion::<f64>(&text).unwrap_err().to_string();
        assert!(err.contains("frame 7"), "{err}");
    }

    #[test]
    fn nan_coordinate_is_named() {
        let text = file_with(3, 2, |i| {
            if i == 1 {
                "0 0 0 0 NaN 0".to_string()
            } else {
                row(2, 1.0)
            }
        });
        let err = parse_motion::<f64>(&text).unwrap_err().to_string();
        assert!(err.contains("frame 2") && err.contains("coordinate 5") && err.contains("joint 2 y"), "{err}");
    }

    #[test]
    fn bad_header_rejected() {
        assert!(parse_motion::<f64>("MOTION v2\n").is_err());
        assert!(parse_motion::<f64>("MOTION v1\njoints=3 rate=0 frames=1 label=x\n0 0 0 0 0 0 0 0 0\n").is_err());
        assert!(parse_motion::<f64>("MOTION v1\njoints=1 rate=25 frames=2 label=x\n0 0 0\n").is_err());
    }

    #[test]
    fn format_then_parse_is_exact() {
        let text = file_with(4, 2, |i| format!("{} 0.1 -0.30000000000000004 1e-9 2 {}", i, 1.0 / 3.0));
        let seq: MotionSequence = parse_motion(&text).unwrap();
        let again: MotionSequence = parse_motion(&format_motion(&seq)).unwrap();
        assert_eq!(seq, again);
    }
}
