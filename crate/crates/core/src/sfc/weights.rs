//! Binary weight file: magic `SFCW`, `u32` version, `u32`-length JSON
//! metadata, then tensor records `{u32 name length, name, u32 rank,
//! u32 dims..., f32 data}`, all little-endian and row-major.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use super::model::{expected_shapes, SfcConfig, SfcModel};
use super::SfcError;

pub const MAGIC: [u8; 4] = *b"SFCW";
pub const VERSION: u32 = 1;
const MAX_NAME: u32 = 4096;
const MAX_META: u32 = 1 << 20;

pub fn write_weights<W: Write>(m: &SfcModel, mut out: W) -> Result<(), SfcError> {
    m.validate()?;
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    let meta = serde_json::to_vec(&m.config)?;
    out.write_all(&(meta.len() as u32).to_le_bytes())?;
    out.write_all(&meta)?;
    for (name, shape, data) in m.named_tensors() {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&(shape.len() as u32).to_le_bytes())?;
        for d in &shape {
            out.write_all(&(*d as u32).to_le_bytes())?;
        }
        for v in data {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_weights(m: &SfcModel, path: &Path) -> Result<(), SfcError> {
    write_weights(m, BufWriter::new(File::create(path)?))
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<(), SfcError> {
    input.read_exact(buf).map_err(|e| if e.kind() == ErrorKind::UnexpectedEof { SfcError::TruncatedFile } else { e.into() })
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32, SfcError> {
    let mut b = [0u8; 4];
    read_exact(input, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_weights<R: Read>(mut input: R) -> Result<SfcModel, SfcError> {
    let mut magic = [0u8; 4];
    read_exact(&mut input, &mut magic)?;
    if magic != MAGIC {
        return Err(SfcError::BadMagic(magic));
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(SfcError::VersionUnsupported(version));
    }
    let meta_len = read_u32(&mut input)?;
    if meta_len > MAX_META {
        return Err(SfcError::Metadata(format!("metadata block of {meta_len} bytes")));
    }
    let mut meta = vec![0u8; meta_len as usize];
    read_exact(&mut input, &mut meta)?;
    let config: SfcConfig = serde_json::from_slice(&meta).map_err(|e| SfcError::Metadata(e.to_string()))?;
    let mut model = SfcModel::zeros(config)?;
    let expected = expected_shapes(&config);
    let mut seen = HashSet::new();
    for _ in 0..expected.len() {
        let name_len = read_u32(&mut input)?;
        if name_len > MAX_NAME {
            return Err(SfcError::Metadata(format!("tensor name of {name_len} bytes")));
        }
        let mut name = vec![0u8; name_len as usize];
        read_exact(&mut input, &mut name)?;
        let name = String::from_utf8(name).map_err(|e| SfcError::Metadata(e.to_string()))?;
        let rank = read_u32(&mut input)?;
        if rank > 8 {
            return Err(SfcError::Metadata(format!("tensor {name} has rank {rank}")));
        }
        let mut dims = Vec::with_capacity(rank as usize);
        for _ in 0..rank {
            dims.push(read_u32(&mut input)? as usize);
        }
        if !seen.insert(name.clone()) {
            return Err(SfcError::UnexpectedTensor(name));
        }
        let (shape, slot) = model.tensor_mut(&name).ok_or_else(|| SfcError::UnexpectedTensor(name.clone()))?;
        if shape != dims {
            return Err(SfcError::ShapeMismatch { name, expected: shape, found: dims });
        }
        let mut bytes = vec![0u8; slot.len() * 4];
        read_exact(&mut input, &mut bytes)?;
        for (v, chunk) in slot.iter_mut().zip(bytes.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
        }
    }
    let mut extra = [0u8; 1];
    if input.read(&mut extra)? != 0 {
        return Err(SfcError::Metadata("trailing bytes after the last tensor".into()));
    }
    model.validate()?;
    Ok(model)
}

pub fn load_weights(path: &Path) -> Result<SfcModel, SfcError> {
    read_weights(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bytes(m: &SfcModel) -> Vec<u8> {
        let mut buf = Vec::new();
        write_weights(m, &mut buf).unwrap();
        buf
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let m = SfcModel::random(SfcConfig::default(), 17).unwrap();
        let buf = bytes(&m);
        let back = read_weights(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(bytes(&back), buf);
    }

    #[test]
    fn bad_magic() {
        let mut buf = bytes(&SfcModel::zeros(SfcConfig::default()).unwrap());
        buf[0] = b'X';
        assert!(matches!(read_weights(buf.as_slice()), Err(SfcError::BadMagic(_))));
    }

    #[test]
    fn bad_version() {
        let mut buf = bytes(&SfcModel::zeros(SfcConfig::default()).unwrap());
        buf[4] = 9;
        assert!(matches!(read_weights(buf.as_slice()), Err(SfcError::VersionUnsupported(9))));
    }

    #[test]
    fn missing_tensors_are_truncation() {
        let cfg = SfcConfig { n_layers: 1, ..Default::default() };
        let small = bytes(&SfcModel::zeros(cfg).unwrap());
        // Claim two layers while carrying the tensors of one.
        let meta = serde_json::to_vec(&SfcConfig { n_layers: 2, ..cfg }).unwrap();
        let old_len = u32::from_le_bytes(small[8..12].try_into().unwrap()) as usize;
        let mut buf = small[..8].to_vec();
        buf.extend((meta.len() as u32).to_le_bytes());
        buf.extend(&meta);
        buf.extend(&small[12 + old_len..]);
        assert!(matches!(read_weights(buf.as_slice()), Err(SfcError::TruncatedFile)));
        let cut = &small[..small.len() - 3];
        assert!(matches!(read_weights(cut), Err(SfcError::TruncatedFile)));
    }

    #[test]
    fn wrong_dims() {
        let m = SfcModel::zeros(SfcConfig::default()).unwrap();
        let mut buf = bytes(&m);
        // First tensor record starts after the metadata; its first dim follows name and rank.
        let meta_len = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
        let at = 12 + meta_len + 4 + "embed.weight".len() + 4;
        buf[at..at + 4].copy_from_slice(&31u32.to_le_bytes());
        assert!(matches!(read_weights(buf.as_slice()), Err(SfcError::ShapeMismatch { .. })));
    }
}
