//! Versioned binary serialization for trained networks.
//!
//! Layout: magic `EVQN`, format version (u32 LE), the number of layer
//! sizes (u32 LE), the sizes themselves (u32 LE each), then for every
//! weight layer the row-major weights followed by the biases, all as
//! little-endian 64-bit floats.

use std::io::Read;
use std::path::Path;

use super::mlp::{Layer, Mlp};
use super::LearnerError;

const MAGIC: &[u8; 4] = b"EVQN";
const VERSION: u32 = 1;

pub fn save_model(net: &Mlp, path: &Path) -> Result<(), LearnerError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(net.sizes().len() as u32).to_le_bytes());
    for &size in net.sizes() {
        out.extend_from_slice(&(size as u32).to_le_bytes());
    }
    for layer in &net.layers {
        for &w in &layer.w {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for &b in &layer.b {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| LearnerError::Io(e.to_string()))
}

pub fn load_model(path: &Path) -> Result<Mlp, LearnerError> {
    let file = std::fs::File::open(path).map_err(|e| LearnerError::Io(e.to_string()))?;
    let mut reader = std::io::BufReader::new(file);

    let mut magic = [0u8; 4];
    read_exact(&mut reader, &mut magic)?;
    if &magic != MAGIC {
        return Err(LearnerError::BadModelFile("bad magic".into()));
    }
    let version = read_u32(&mut reader)?;
    if version != VERSION {
        return Err(LearnerError::BadModelFile(format!(
            "unsupported format version {version}"
        )));
    }
    let n_sizes = read_u32(&mut reader)? as usize;
    if !(2..=64).contains(&n_sizes) {
        return Err(LearnerError::BadModelFile(format!(
            "implausible layer count {n_sizes}"
        )));
    }
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        let s = read_u32(&mut reader)? as usize;
        if s == 0 {
            return Err(LearnerError::BadModelFile("zero layer size".into()));
        }
        sizes.push(s);
    }
    let mut layers = Vec::with_capacity(n_sizes - 1);
    for pair in sizes.windows(2) {
        let (in_dim, out_dim) = (pair[0], pair[1]);
        let mut w = vec![0.0; in_dim * out_dim];
        for v in &mut w {
            *v = read_f64(&mut reader)?;
        }
        let mut b = vec![0.0; out_dim];
        for v in &mut b {
            *v = read_f64(&mut reader)?;
        }
        layers.push(Layer {
            w,
            b,
            in_dim,
            out_dim,
        });
    }
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing).map_err(|e| LearnerError::Io(e.to_string()))? != 0 {
        return Err(LearnerError::BadModelFile("trailing bytes".into()));
    }
    Ok(Mlp::from_layers(sizes, layers))
}

fn read_exact(reader: &mut impl Read, buf: &mut [u8]) -> Result<(), LearnerError> {
    reader
        .read_exact(buf)
        .map_err(|e| LearnerError::BadModelFile(format!("truncated file: {e}")))
}

fn read_u32(reader: &mut impl Read) -> Result<u32, LearnerError> {
    let mut buf = [0u8; 4];
    read_exact(reader, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64(reader: &mut impl Read) -> Result<f64, LearnerError> {
    let mut buf = [0u8; 8];
    read_exact(reader, &mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_preserves_every_parameter() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Mlp::init(&[7, 64, 64, 2], &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.evqn");
        save_model(&net, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(net, loaded);
    }

    #[test]
    fn header_layout_is_fixed() {
        let net = Mlp::zeros(&[2, 3, 2]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.evqn");
        save_model(&net, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"EVQN");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        let sizes: Vec<u32> = (0..3)
            .map(|i| u32::from_le_bytes(bytes[12 + 4 * i..16 + 4 * i].try_into().unwrap()))
            .collect();
        assert_eq!(sizes, vec![2, 3, 2]);
        // header 24 bytes + (2*3 + 3 + 3*2 + 2) params * 8 bytes
        assert_eq!(bytes.len(), 24 + 17 * 8);
    }

    #[test]
    fn rejects_corrupt_files() {
        let net = Mlp::zeros(&[2, 2]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.evqn");
        save_model(&net, &path).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        let bad_magic = dir.path().join("bad_magic.evqn");
        std::fs::write(&bad_magic, &bytes).unwrap();
        assert!(matches!(
            load_model(&bad_magic).unwrap_err(),
            LearnerError::BadModelFile(_)
        ));

        let truncated = dir.path().join("short.evqn");
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&truncated, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            load_model(&truncated).unwrap_err(),
            LearnerError::BadModelFile(_)
        ));
    }
}
