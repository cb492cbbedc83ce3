//! Binary training-state checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "IMTCKPT\0" | version u32 | value width u8 (4 or 8)
//! config text | epoch u64 | step u64 | rng seed u64, word u128, draws u64
//! network count u32, then per network: name, spec text, tensor count u32, named tensors
//! generator Adam: step u64, count u32, first moments, second moments
//! discriminator Adam: same
//! SHA-256 of everything above
//! ```
//!
//! Strings are a u32 byte length and UTF-8 bytes; a tensor is a rank u32, one
//! u64 per extent and the values at the stored width.

use std::fs;
use std::path::Path;

use imtrans_core::models::{ModelSpec, Network};
use imtrans_core::optim::AdamState;
use imtrans_core::training::{Models, Precision, TrainConfig, TrainState};
use imtrans_core::{RngStream, Scalar, Tensor};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

const MAGIC: &[u8; 8] = b"IMTCKPT\0";
const NET_MAGIC: &[u8; 8] = b"IMTNET\0\0";
const VERSION: u32 = 1;
const DIGEST: usize = 32;

/// A training state with every value widened to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub epoch: u64,
    pub step: u64,
    pub rng: (u64, u128, u64),
    pub networks: Vec<(String, Network<f64>)>,
    pub gen_opt: AdamState<f64>,
    pub disc_opt: AdamState<f64>,
}

fn widen<T: Scalar>(opt: &AdamState<T>) -> AdamState<f64> {
    AdamState {
        first: opt.first.iter().map(Tensor::cast).collect(),
        second: opt.second.iter().map(Tensor::cast).collect(),
        step: opt.step,
    }
}

fn narrow<T: Scalar>(opt: &AdamState<f64>) -> AdamState<T> {
    AdamState {
        first: opt.first.iter().map(Tensor::cast).collect(),
        second: opt.second.iter().map(Tensor::cast).collect(),
        step: opt.step,
    }
}

impl Checkpoint {
    pub fn from_state<T: Scalar>(state: &TrainState<T>) -> Self {
        let models = state.models();
        let (seed, (word, draws)) = (state.rng().seed(), state.rng().position());
        Checkpoint {
            config: state.config().clone(),
            epoch: state.epoch(),
            step: state.step(),
            rng: (seed, word, draws),
            networks: models
                .named()
                .into_iter()
                .map(|(name, net)| (name.to_string(), net.cast()))
                .collect(),
            gen_opt: widen(&models.gen_opt),
            disc_opt: widen(&models.disc_opt),
        }
    }

    pub fn to_state<T: Scalar>(&self) -> Result<TrainState<T>> {
        self.to_state_with(self.config.clone())
    }

    /// The stored state under a different config, which must describe the
    /// same networks.
    pub fn to_state_with<T: Scalar>(&self, config: TrainConfig) -> Result<TrainState<T>> {
        let gens = self.networks.len() / 2;
        let nets: Vec<Network<T>> = self.networks.iter().map(|(_, n)| n.cast()).collect();
        let (generators, discriminators) = nets.split_at(gens);
        let models = Models {
            generators: generators.to_vec(),
            discriminators: discriminators.to_vec(),
            gen_opt: narrow(&self.gen_opt),
            disc_opt: narrow(&self.disc_opt),
        };
        let (seed, word, draws) = self.rng;
        Ok(TrainState::from_parts(
            config,
            models,
            self.epoch,
            self.step,
            RngStream::at_position(seed, word, draws),
        )?)
    }

    /// The network stored under `name`.
    pub fn network(&self, name: &str) -> Option<&Network<f64>> {
        self.networks.iter().find(|(n, _)| n == name).map(|(_, net)| net)
    }

    /// Generator translating domain A to B (`"a"`) or B to A (`"b"`); paired
    /// checkpoints have only the former.
    pub fn generator(&self, which: &str) -> Result<&Network<f64>> {
        let name = match (which, self.networks.len()) {
            ("a", 2) => "generator",
            ("a", _) => "generator_a",
            ("b", n) if n > 2 => "generator_b",
            _ => {
                return Err(CliError::Validation(format!(
                    "checkpoint has no generator {which:?}"
                )))
            }
        };
        self.network(name)
            .ok_or_else(|| CliError::Validation(format!("checkpoint has no network {name:?}")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let width = match self.config.precision {
            Precision::F32 => 4u8,
            Precision::F64 => 8,
        };
        let mut w = Writer::start(MAGIC, width);
        w.str(&self.config.to_text());
        w.u64(self.epoch);
        w.u64(self.step);
        w.u64(self.rng.0);
        w.buf.extend_from_slice(&self.rng.1.to_le_bytes());
        w.u64(self.rng.2);
        w.u32(self.networks.len() as u32);
        for (name, net) in &self.networks {
            w.str(name);
            w.network(net);
        }
        for opt in [&self.gen_opt, &self.disc_opt] {
            w.u64(opt.step);
            w.u32(opt.first.len() as u32);
            for t in opt.first.iter().chain(&opt.second) {
                w.tensor(t);
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Reader::start(bytes, MAGIC)?;
        let config = TrainConfig::from_text(&r.str()?).map_err(|e| format!("stored config: {e}"))?;
        let epoch = r.u64()?;
        let step = r.u64()?;
        let seed = r.u64()?;
        let word = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));
        let draws = r.u64()?;
        let count = r.u32()? as usize;
        let mut networks = Vec::with_capacity(count.min(16));
        for _ in 0..count {
            let name = r.str()?;
            let net = r.network().map_err(|e| format!("network {name}: {e}"))?;
            networks.push((name, net));
        }
        let mut opts = Vec::with_capacity(2);
        for _ in 0..2 {
            let step = r.u64()?;
            let n = r.u32()? as usize;
            let mut all = Vec::with_capacity(2 * n.min(1024));
            for _ in 0..2 * n {
                all.push(r.tensor()?);
            }
            let second = all.split_off(n);
            opts.push(AdamState {
                first: all,
                second,
                step,
            });
        }
        r.end()?;
        let disc_opt = opts.pop().expect("two optimizer states");
        let gen_opt = opts.pop().expect("two optimizer states");
        Ok(Checkpoint {
            config,
            epoch,
            step,
            rng: (seed, word, draws),
            networks,
            gen_opt,
            disc_opt,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Checkpoint::from_bytes(&bytes).map_err(|e| CliError::format(path, e))
    }
}

/// Save one network: magic, version, value width, spec text, named tensors and
/// a SHA-256 trailer. Values are stored at the network's own precision.
pub fn save_network<T: Scalar>(net: &Network<T>, path: &Path) -> Result<()> {
    let mut w = Writer::start(NET_MAGIC, std::mem::size_of::<T>() as u8);
    w.network(&net.cast());
    write_file(path, &w.finish())
}

pub fn load_network<T: Scalar>(path: &Path) -> Result<Network<T>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let parse = || {
        let mut r = Reader::start(&bytes, NET_MAGIC)?;
        let net = r.network()?;
        r.end()?;
        Ok(net)
    };
    parse()
        .map(|net: Network<f64>| net.cast())
        .map_err(|e: String| CliError::format(path, e))
}

/// [`load_network`] that also requires the stored spec to equal `expected`.
pub fn load_network_as<T: Scalar>(path: &Path, expected: &ModelSpec) -> Result<Network<T>> {
    let net = load_network::<T>(path)?;
    if net.spec() != expected {
        return Err(imtrans_core::Error::SpecMismatch(format!(
            "{} holds a {:?} network with {} blocks, expected {:?} with {} blocks",
            path.display(),
            net.spec().kind,
            net.spec().blocks.len(),
            expected.kind,
            expected.blocks.len()
        ))
        .into());
    }
    Ok(net)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

struct Writer {
    buf: Vec<u8>,
    width: u8,
}

impl Writer {
    fn start(magic: &[u8; 8], width: u8) -> Self {
        let mut w = Writer { buf: magic.to_vec(), width };
        w.u32(VERSION);
        w.buf.push(width);
        w
    }

    fn finish(mut self) -> Vec<u8> {
        let digest = Sha256::digest(&self.buf);
        self.buf.extend_from_slice(&digest);
        self.buf
    }

    fn network(&mut self, net: &Network<f64>) {
        self.str(&net.spec().to_text());
        let tensors = net.named_tensors();
        self.u32(tensors.len() as u32);
        for (name, t) in &tensors {
            self.str(name);
            self.tensor(t);
        }
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn tensor(&mut self, t: &Tensor<f64>) {
        self.u32(t.shape().len() as u32);
        for &d in t.shape() {
            self.u64(d as u64);
        }
        for &v in t.data() {
            if self.width == 4 {
                self.buf.extend_from_slice(&(v as f32).to_le_bytes());
            } else {
                self.buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    width: u8,
}

impl<'a> Reader<'a> {
    fn start(bytes: &'a [u8], magic: &[u8; 8]) -> std::result::Result<Self, String> {
        if bytes.len() < magic.len() + DIGEST || &bytes[..magic.len()] != magic {
            return Err("bad magic or file too short".into());
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST);
        if Sha256::digest(body).as_slice() != digest {
            return Err("checksum mismatch (truncated or corrupted file)".into());
        }
        let mut r = Reader {
            buf: body,
            pos: magic.len(),
            width: 8,
        };
        let version = r.u32()?;
        if version != VERSION {
            return Err(format!("unsupported format version {version}"));
        }
        r.width = r.take(1)?[0];
        if r.width != 4 && r.width != 8 {
            return Err(format!("invalid value width {}", r.width));
        }
        Ok(r)
    }

    fn end(&self) -> std::result::Result<(), String> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(format!("{} trailing bytes", self.buf.len() - self.pos))
        }
    }

    fn network(&mut self) -> std::result::Result<Network<f64>, String> {
        let spec = ModelSpec::from_text(&self.str()?).map_err(|e| e.to_string())?;
        let n = self.u32()? as usize;
        let mut tensors = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let name = self.str()?;
            tensors.push((name, self.tensor()?));
        }
        Network::from_named_tensors(spec, tensors).map_err(|e| e.to_string())
    }

    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| format!("unexpected end of data at byte {}", self.pos))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn str(&mut self) -> std::result::Result<String, String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| "invalid UTF-8 string".to_string())
    }

    fn tensor(&mut self) -> std::result::Result<Tensor<f64>, String> {
        let rank = self.u32()? as usize;
        if rank > 8 {
            return Err(format!("implausible tensor rank {rank}"));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(usize::try_from(self.u64()?).map_err(|_| "extent overflows usize".to_string())?);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or("tensor size overflows")?;
        let bytes = self.take(n.checked_mul(self.width as usize).ok_or("tensor size overflows")?)?;
        let data = if self.width == 4 {
            bytes
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
                .collect()
        } else {
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect()
        };
        Tensor::from_vec(&shape, data).map_err(|e| e.to_string())
    }
}
