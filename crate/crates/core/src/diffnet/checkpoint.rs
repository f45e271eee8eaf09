//! `IFNW` network checkpoints: little-endian, magic `IFNW`, format version,
//! layer count, then per layer a kind byte, its dimensions as `u32`s and the
//! parameter payload (weights then biases) as `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{LayerSpec, Network};
use crate::{Error, Result, Scalar};

pub const MAGIC: &[u8; 4] = b"IFNW";
pub const VERSION: u32 = 1;

const KIND_DENSE: u8 = 0;
const KIND_CONV2D: u8 = 1;
const KIND_RELU: u8 = 2;
const KIND_TANH: u8 = 3;
const KIND_FLATTEN: u8 = 4;

fn dims_of(spec: &LayerSpec) -> (u8, Vec<usize>) {
    match *spec {
        LayerSpec::Dense { in_dim, out_dim } => (KIND_DENSE, vec![in_dim, out_dim]),
        LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, padding } => {
            (KIND_CONV2D, vec![in_channels, out_channels, kernel, stride, padding])
        }
        LayerSpec::Relu => (KIND_RELU, vec![]),
        LayerSpec::Tanh => (KIND_TANH, vec![]),
        LayerSpec::Flatten => (KIND_FLATTEN, vec![]),
    }
}

pub fn write_network<T: Scalar, W: Write>(net: &Network<T>, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(net.layers().len() as u32).to_le_bytes())?;
    for (spec, params) in net.layers().iter().zip(net.params()) {
        let (kind, dims) = dims_of(spec);
        out.write_all(&[kind])?;
        for d in dims {
            let d = u32::try_from(d).map_err(|_| Error::InvalidSpec(format!("dimension {d} exceeds u32")))?;
            out.write_all(&d.to_le_bytes())?;
        }
        for v in params.iter().flat_map(|t| t.data()) {
            out.write_all(&v.to_f64_lossless().to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => {
                Error::Format { offset: self.offset, message: format!("file ends while reading {what}") }
            }
            _ => Error::Io(e),
        })?;
        self.offset += N as u64;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes::<4>(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes::<8>(what)?))
    }
}

pub fn read_network<T: Scalar, R: Read>(input: R) -> Result<Network<T>> {
    let mut cur = Cursor { inner: input, offset: 0 };
    let magic = cur.bytes::<4>("magic")?;
    if &magic != MAGIC {
        return Err(Error::Format { offset: 0, message: format!("bad magic {magic:?}") });
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(Error::Format { offset: 4, message: format!("unsupported version {version}") });
    }
    let count = cur.u32("layer count")? as usize;
    let mut layers = Vec::with_capacity(count);
    let mut payloads = Vec::with_capacity(count);
    for _ in 0..count {
        let at = cur.offset;
        let [kind] = cur.bytes::<1>("layer kind")?;
        let spec = match kind {
            KIND_DENSE => {
                let in_dim = cur.u32("dense dims")? as usize;
                LayerSpec::Dense { in_dim, out_dim: cur.u32("dense dims")? as usize }
            }
            KIND_CONV2D => {
                let mut d = [0usize; 5];
                for v in &mut d {
                    *v = cur.u32("conv2d dims")? as usize;
                }
                LayerSpec::Conv2d { in_channels: d[0], out_channels: d[1], kernel: d[2], stride: d[3], padding: d[4] }
            }
            KIND_RELU => LayerSpec::Relu,
            KIND_TANH => LayerSpec::Tanh,
            KIND_FLATTEN => LayerSpec::Flatten,
            other => return Err(Error::Format { offset: at, message: format!("unknown layer kind {other}") }),
        };
        spec.validate().map_err(|e| Error::Format { offset: at, message: e.to_string() })?;
        let payload = (0..spec.param_count()).map(|_| cur.f64("parameters")).collect::<Result<Vec<_>>>()?;
        layers.push(spec);
        payloads.push(payload);
    }
    let mut net = Network::zeroed(layers)?;
    let flat: Vec<T> = payloads.into_iter().flatten().map(T::from_f64_lossy).collect();
    net.set_flat_params(&flat)?;
    Ok(net)
}

pub fn save_network<T: Scalar>(net: &Network<T>, path: impl AsRef<Path>) -> Result<()> {
    write_network(net, BufWriter::new(File::create(path)?))
}

pub fn load_network<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>> {
    read_network(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffnet::NetworkBuilder;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_net() -> Network<f64> {
        NetworkBuilder::new(&[3, 8, 8])
            .conv3x3(4, 2, 1)
            .relu()
            .flatten()
            .dense(5)
            .tanh()
            .build(&mut ChaCha8Rng::seed_from_u64(11))
            .unwrap()
    }

    #[test]
    fn header_layout() {
        let mut bytes = Vec::new();
        write_network(&sample_net(), &mut bytes).unwrap();
        assert_eq!(&bytes[0..4], b"IFNW");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 5);
        assert_eq!(bytes[12], KIND_CONV2D);
        let params = sample_net().param_count();
        assert_eq!(bytes.len(), 12 + (1 + 20) + 1 + 1 + (1 + 8) + 1 + params * 8);
    }

    #[test]
    fn round_trip_is_bitwise() {
        let net = sample_net();
        let mut bytes = Vec::new();
        write_network(&net, &mut bytes).unwrap();
        let back: Network<f64> = read_network(bytes.as_slice()).unwrap();
        assert_eq!(back.layers(), net.layers());
        let bits = |n: &Network<f64>| n.flat_params().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&net));
        let mut again = Vec::new();
        write_network(&back, &mut again).unwrap();
        assert_eq!(again, bytes);
    }

    #[test]
    fn truncation_reports_offset() {
        let mut bytes = Vec::new();
        write_network(&sample_net(), &mut bytes).unwrap();
        bytes.truncate(40);
        match read_network::<f64, _>(bytes.as_slice()) {
            Err(Error::Format { offset, .. }) => assert!(offset <= 40),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(read_network::<f64, _>(&b"NOPE\x01\0\0\0"[..]), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn single_precision_round_trip() {
        let net: Network<f32> = NetworkBuilder::new(&[2]).dense(3).build(&mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let mut bytes = Vec::new();
        write_network(&net, &mut bytes).unwrap();
        let back: Network<f32> = read_network(bytes.as_slice()).unwrap();
        assert_eq!(back, net);
    }
}
