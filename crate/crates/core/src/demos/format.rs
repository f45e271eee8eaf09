//! "IFOD" demonstration files.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "IFOD" | version u32 | env_id (u32 byte length + utf-8)
//! G u32 | state_dim u32 | trajectory count u32 | length u32 per trajectory
//! per trajectory: length * G * G frame bytes (0 or 255)
//!                 [length * state_dim f64 ground-truth states]
//! ```
//!
//! The bracketed analysis section is optional; whether it is present is
//! decided from the file size. Actions are never stored.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::envs::{stack, Frame, StackedObservation};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"IFOD";
pub const VERSION: u32 = 1;

/// A trajectory as recorded: raw frames plus, optionally, the true states.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoTrajectory {
    pub frames: Vec<Frame>,
    pub states: Option<Vec<Vec<f64>>>,
}

/// In-memory contents of a demo file, used for writing.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoFile {
    pub env_id: String,
    pub image_size: usize,
    pub state_dim: usize,
    pub trajectories: Vec<DemoTrajectory>,
}

impl DemoFile {
    fn has_analysis(&self) -> Result<bool> {
        let with = self.trajectories.iter().filter(|t| t.states.is_some()).count();
        if with != 0 && with != self.trajectories.len() {
            return Err(Error::Precondition("either every trajectory carries states or none does".into()));
        }
        Ok(with != 0 && !self.trajectories.is_empty())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let analysis = self.has_analysis()?;
        let g = self.image_size;
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&u32_of(self.env_id.len(), "env id length")?.to_le_bytes())?;
        out.write_all(self.env_id.as_bytes())?;
        for v in [g, self.state_dim, self.trajectories.len()] {
            out.write_all(&u32_of(v, "header field")?.to_le_bytes())?;
        }
        for t in &self.trajectories {
            out.write_all(&u32_of(t.frames.len(), "trajectory length")?.to_le_bytes())?;
        }
        let mut bytes = Vec::with_capacity(g * g);
        for (k, t) in self.trajectories.iter().enumerate() {
            for f in &t.frames {
                if f.size() != g {
                    return Err(Error::Shape(format!("trajectory {k}: frame of size {} in a G={g} file", f.size())));
                }
                bytes.clear();
                bytes.extend(f.pixels().iter().map(|&p| if p > 0.5 { 255u8 } else { 0 }));
                out.write_all(&bytes)?;
            }
            if analysis {
                let states = t.states.as_ref().expect("checked above");
                if states.len() != t.frames.len() {
                    return Err(Error::Shape(format!(
                        "trajectory {k}: {} states for {} frames",
                        states.len(),
                        t.frames.len()
                    )));
                }
                for s in states {
                    if s.len() != self.state_dim {
                        return Err(Error::Shape(format!("trajectory {k}: state of dim {}", s.len())));
                    }
                    for v in s {
                        out.write_all(&v.to_le_bytes())?;
                    }
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }
}

fn u32_of(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Precondition(format!("{what} {v} does not fit in u32")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemoMode {
    /// Header and frames only; ground-truth bytes are skipped unread.
    Video,
    /// Additionally exposes the stored states. Evaluation code and the
    /// privileged-state baseline only.
    Analysis,
}

/// A loaded demo file. Observations are stacked at load time with the same
/// repeat-first-frame rule the environments use.
#[derive(Clone, Debug)]
pub struct DemoView {
    env_id: String,
    image_size: usize,
    state_dim: usize,
    has_analysis_section: bool,
    frames: Vec<Vec<Frame>>,
    observations: Vec<Vec<StackedObservation>>,
    states: Option<Vec<Vec<Vec<f64>>>>,
}

impl DemoView {
    pub fn env_id(&self) -> &str {
        &self.env_id
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Whether the file carries ground truth, whatever the open mode.
    pub fn has_analysis_section(&self) -> bool {
        self.has_analysis_section
    }

    pub fn num_trajectories(&self) -> usize {
        self.frames.len()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.frames.iter().map(Vec::len).collect()
    }

    pub fn frames(&self) -> &[Vec<Frame>] {
        &self.frames
    }

    pub fn observations(&self) -> &[Vec<StackedObservation>] {
        &self.observations
    }

    pub fn analysis_states(&self) -> Result<&[Vec<Vec<f64>>]> {
        self.states.as_deref().ok_or(Error::MissingAnalysis)
    }

    /// The first `n` trajectories.
    pub fn take(&self, n: usize) -> Result<DemoView> {
        if n == 0 || n > self.num_trajectories() {
            return Err(Error::Precondition(format!("cannot take {n} of {} trajectories", self.num_trajectories())));
        }
        Ok(DemoView {
            frames: self.frames[..n].to_vec(),
            observations: self.observations[..n].to_vec(),
            states: self.states.as_ref().map(|s| s[..n].to_vec()),
            ..self.clone_header()
        })
    }

    fn clone_header(&self) -> DemoView {
        DemoView {
            env_id: self.env_id.clone(),
            image_size: self.image_size,
            state_dim: self.state_dim,
            has_analysis_section: self.has_analysis_section,
            frames: Vec::new(),
            observations: Vec::new(),
            states: None,
        }
    }

    /// Back to the writable form. States are included only in analysis mode.
    pub fn to_file(&self) -> DemoFile {
        DemoFile {
            env_id: self.env_id.clone(),
            image_size: self.image_size,
            state_dim: self.state_dim,
            trajectories: self
                .frames
                .iter()
                .enumerate()
                .map(|(k, f)| DemoTrajectory { frames: f.clone(), states: self.states.as_ref().map(|s| s[k].clone()) })
                .collect(),
        }
    }
}

struct Reader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read + Seek> Reader<R> {
    fn bytes(&mut self, n: usize, what: &str) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        let mut filled = 0;
        while filled < n {
            match self.inner.read(&mut buf[filled..])? {
                0 => {
                    return Err(Error::Format {
                        offset: self.offset + filled as u64,
                        message: format!("file ends inside {what}"),
                    })
                }
                k => filled += k,
            }
        }
        self.offset += n as u64;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.bytes(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn skip(&mut self, n: u64) -> Result<()> {
        self.inner.seek(SeekFrom::Current(n as i64))?;
        self.offset += n;
        Ok(())
    }
}

pub fn read_demos<R: Read + Seek>(mut input: R, mode: DemoMode) -> Result<DemoView> {
    let file_len = input.seek(SeekFrom::End(0))?;
    input.seek(SeekFrom::Start(0))?;
    let mut r = Reader { inner: input, offset: 0 };

    if &r.bytes(4, "magic")?[..] != MAGIC {
        return Err(Error::Format { offset: 0, message: "bad magic, expected IFOD".into() });
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Format { offset: 4, message: format!("unsupported version {version}") });
    }
    let id_len = r.u32("env id length")? as usize;
    let id_offset = r.offset;
    let env_id = String::from_utf8(r.bytes(id_len, "env id")?)
        .map_err(|_| Error::Format { offset: id_offset, message: "env id is not utf-8".into() })?;
    let g = r.u32("image size")? as usize;
    let state_dim = r.u32("state dim")? as usize;
    let count = r.u32("trajectory count")? as usize;
    let lengths = (0..count).map(|_| Ok(r.u32("trajectory lengths")? as usize)).collect::<Result<Vec<_>>>()?;

    let steps: u64 = lengths.iter().map(|&l| l as u64).sum();
    let frame_bytes = steps * (g * g) as u64;
    let state_bytes = steps * (state_dim * 8) as u64;
    let body = file_len - r.offset;
    let has_analysis_section = if body == frame_bytes + state_bytes && state_bytes > 0 {
        true
    } else if body == frame_bytes {
        false
    } else if body < frame_bytes {
        return Err(Error::Format { offset: file_len, message: "file ends inside frame data".into() });
    } else if body < frame_bytes + state_bytes {
        return Err(Error::Format { offset: file_len, message: "file ends inside the analysis section".into() });
    } else {
        return Err(Error::Format { offset: r.offset + frame_bytes + state_bytes, message: "trailing bytes".into() });
    };
    if mode == DemoMode::Analysis && !has_analysis_section {
        return Err(Error::MissingAnalysis);
    }

    let mut frames = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    for &len in &lengths {
        let mut traj = Vec::with_capacity(len);
        for _ in 0..len {
            let at = r.offset;
            let raw = r.bytes(g * g, "frame data")?;
            let mut pixels = Vec::with_capacity(g * g);
            for (i, &b) in raw.iter().enumerate() {
                pixels.push(match b {
                    0 => 0.0,
                    255 => 1.0,
                    other => {
                        return Err(Error::Format { offset: at + i as u64, message: format!("pixel byte {other}") })
                    }
                });
            }
            traj.push(Frame::from_pixels(g, pixels)?);
        }
        frames.push(traj);
        let section = (len * state_dim * 8) as u64;
        if !has_analysis_section {
            continue;
        }
        match mode {
            DemoMode::Video => r.skip(section)?,
            DemoMode::Analysis => {
                let raw = r.bytes(section as usize, "analysis section")?;
                let values: Vec<f64> =
                    raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
                states.push(values.chunks_exact(state_dim.max(1)).map(<[f64]>::to_vec).collect());
            }
        }
    }

    let observations = frames
        .iter()
        .map(|traj| (0..traj.len()).map(|t| stack(&traj[..=t])).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(DemoView {
        env_id,
        image_size: g,
        state_dim,
        has_analysis_section,
        frames,
        observations,
        states: (mode == DemoMode::Analysis).then_some(states),
    })
}

pub fn load_demos(path: impl AsRef<Path>, mode: DemoMode) -> Result<DemoView> {
    read_demos(BufReader::new(File::open(path)?), mode)
}
