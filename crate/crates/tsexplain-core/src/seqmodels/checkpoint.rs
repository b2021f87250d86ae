//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    b"TSXM"
//! version  u32 (currently 1)
//! kind     u8  (0 = predictor, 1 = generator)
//! mode     u8  (predictor: 0; generator: 0 = per-feature, 1 = joint-diagonal)
//! dims     u32 num_features, u32 num_classes (0 for generators), u32 hidden
//! tensors  u32 count, then per tensor: u8 ndims, u32 dims.., f64 data..
//! ```
//!
//! Tensors appear in a fixed order (update, reset, candidate gates, then the
//! output layer), each as `weights, bias` rows. Loads are strict: shapes must
//! match the header dims, values must be finite, and trailing bytes are an
//! error.

use super::generator::{GeneratorMode, GeneratorModel};
use super::gru::GruCell;
use super::predictor::PredictorModel;
use super::ModelError;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::{self, Read, Write};

const MAGIC: [u8; 4] = *b"TSXM";
const VERSION: u32 = 1;
const KIND_PREDICTOR: u8 = 0;
const KIND_GENERATOR: u8 = 1;

fn kind_name(kind: u8) -> String {
    match kind {
        KIND_PREDICTOR => "predictor".to_string(),
        KIND_GENERATOR => "generator".to_string(),
        other => format!("unknown (code {other})"),
    }
}

struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.offset += n as u64;
        Ok(n)
    }
}

impl<R: Read> CountingReader<R> {
    fn new(inner: R) -> Self {
        CountingReader { inner, offset: 0 }
    }

    fn map_io(&self, e: io::Error) -> ModelError {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            ModelError::Truncated { offset: self.offset }
        } else {
            ModelError::Io(e)
        }
    }

    fn u8(&mut self) -> Result<u8, ModelError> {
        ReadBytesExt::read_u8(self).map_err(|e| self.map_io(e))
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        ReadBytesExt::read_u32::<LittleEndian>(self).map_err(|e| self.map_io(e))
    }

    fn f64(&mut self) -> Result<f64, ModelError> {
        ReadBytesExt::read_f64::<LittleEndian>(self).map_err(|e| self.map_io(e))
    }

    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], ModelError> {
        let mut buf = [0u8; N];
        self.read_exact(&mut buf).map_err(|e| self.map_io(e))?;
        Ok(buf)
    }
}

struct Header {
    mode: u8,
    num_features: usize,
    num_classes: usize,
    hidden: usize,
}

fn write_model<W: Write>(
    mut w: W,
    kind: u8,
    mode: u8,
    num_features: usize,
    num_classes: usize,
    hidden: usize,
    tensors: &[&Vec<f64>],
    dims: &[Vec<usize>],
) -> Result<(), ModelError> {
    w.write_all(&MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u8(kind)?;
    w.write_u8(mode)?;
    w.write_u32::<LittleEndian>(num_features as u32)?;
    w.write_u32::<LittleEndian>(num_classes as u32)?;
    w.write_u32::<LittleEndian>(hidden as u32)?;
    w.write_u32::<LittleEndian>(tensors.len() as u32)?;
    for (tensor, shape) in tensors.iter().zip(dims) {
        debug_assert_eq!(tensor.len(), shape.iter().product::<usize>());
        w.write_u8(shape.len() as u8)?;
        for &d in shape {
            w.write_u32::<LittleEndian>(d as u32)?;
        }
        for &v in tensor.iter() {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_header<R: Read>(r: &mut CountingReader<R>, expect_kind: u8) -> Result<Header, ModelError> {
    let magic: [u8; 4] = r.bytes()?;
    if magic != MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(ModelError::UnsupportedVersion {
            found: version,
            supported: VERSION,
        });
    }
    let kind = r.u8()?;
    if kind != expect_kind {
        return Err(ModelError::WrongKind {
            expected: if expect_kind == KIND_PREDICTOR {
                "predictor"
            } else {
                "generator"
            },
            found: kind_name(kind),
        });
    }
    let mode = r.u8()?;
    let num_features = r.u32()? as usize;
    let num_classes = r.u32()? as usize;
    let hidden = r.u32()? as usize;
    if num_features == 0 || hidden == 0 {
        return Err(ModelError::InvalidArgument(
            "checkpoint header has zero-sized dimensions".into(),
        ));
    }
    Ok(Header {
        mode,
        num_features,
        num_classes,
        hidden,
    })
}

fn read_tensors<R: Read>(
    r: &mut CountingReader<R>,
    tensors: Vec<&mut Vec<f64>>,
    dims: &[Vec<usize>],
) -> Result<(), ModelError> {
    let count = r.u32()? as usize;
    if count != tensors.len() {
        return Err(ModelError::InvalidArgument(format!(
            "checkpoint holds {count} tensors, expected {}",
            tensors.len()
        )));
    }
    for (idx, (tensor, shape)) in tensors.into_iter().zip(dims).enumerate() {
        let ndims = r.u8()? as usize;
        if ndims != shape.len() {
            return Err(ModelError::InvalidArgument(format!(
                "tensor {idx} has {ndims} dimensions, expected {}",
                shape.len()
            )));
        }
        for (axis, &want) in shape.iter().enumerate() {
            let got = r.u32()? as usize;
            if got != want {
                return Err(ModelError::InvalidArgument(format!(
                    "tensor {idx} axis {axis} has size {got}, expected {want}"
                )));
            }
        }
        for slot in tensor.iter_mut() {
            let v = r.f64()?;
            if !v.is_finite() {
                return Err(ModelError::InvalidArgument(format!(
                    "tensor {idx} contains a non-finite value"
                )));
            }
            *slot = v;
        }
    }
    let mut probe = [0u8; 1];
    match Read::read(r, &mut probe) {
        Ok(0) => Ok(()),
        Ok(_) => Err(ModelError::InvalidArgument(
            "trailing data after checkpoint".into(),
        )),
        Err(e) => Err(ModelError::Io(e)),
    }
}

fn zeroed_cell(input_dim: usize, hidden: usize) -> GruCell {
    GruCell {
        input_dim,
        hidden,
        wz: vec![0.0; hidden * input_dim],
        uz: vec![0.0; hidden * hidden],
        bz: vec![0.0; hidden],
        wr: vec![0.0; hidden * input_dim],
        ur: vec![0.0; hidden * hidden],
        br: vec![0.0; hidden],
        wh: vec![0.0; hidden * input_dim],
        uh: vec![0.0; hidden * hidden],
        bh: vec![0.0; hidden],
    }
}

pub fn save_predictor<W: Write>(w: W, model: &PredictorModel) -> Result<(), ModelError> {
    use super::SequencePredictor;
    write_model(
        w,
        KIND_PREDICTOR,
        0,
        model.num_features(),
        model.num_classes(),
        model.hidden(),
        &model.tensors(),
        &model.tensor_dims(),
    )
}

pub fn load_predictor<R: Read>(r: R) -> Result<PredictorModel, ModelError> {
    let mut r = CountingReader::new(r);
    let header = read_header(&mut r, KIND_PREDICTOR)?;
    if header.num_classes < 2 {
        return Err(ModelError::InvalidArgument(
            "predictor checkpoint needs at least two classes".into(),
        ));
    }
    let mut model = PredictorModel {
        cell: zeroed_cell(header.num_features, header.hidden),
        readout_w: vec![0.0; header.num_classes * header.hidden],
        readout_b: vec![0.0; header.num_classes],
        num_classes: header.num_classes,
    };
    let dims = model.tensor_dims();
    read_tensors(&mut r, model.tensors_mut(), &dims)?;
    Ok(model)
}

pub fn save_generator<W: Write>(w: W, model: &GeneratorModel) -> Result<(), ModelError> {
    use super::CounterfactualGenerator;
    let mode = match model.mode() {
        GeneratorMode::PerFeature => 0,
        GeneratorMode::JointDiagonal => 1,
    };
    write_model(
        w,
        KIND_GENERATOR,
        mode,
        model.num_features(),
        0,
        model.hidden(),
        &model.tensors(),
        &model.tensor_dims(),
    )
}

pub fn load_generator<R: Read>(r: R) -> Result<GeneratorModel, ModelError> {
    let mut r = CountingReader::new(r);
    let header = read_header(&mut r, KIND_GENERATOR)?;
    let mode = match header.mode {
        0 => GeneratorMode::PerFeature,
        1 => GeneratorMode::JointDiagonal,
        other => {
            return Err(ModelError::InvalidArgument(format!(
                "unknown generator mode code {other}"
            )))
        }
    };
    let mut model = GeneratorModel {
        cell: zeroed_cell(header.num_features, header.hidden),
        head_w: vec![0.0; 2 * header.num_features * header.hidden],
        head_b: vec![0.0; 2 * header.num_features],
        mode,
    };
    let dims = model.tensor_dims();
    read_tensors(&mut r, model.tensors_mut(), &dims)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, tag};
    use rand::Rng;

    fn scrambled_predictor() -> PredictorModel {
        let mut model = PredictorModel::new(3, 2, 6, 17);
        let mut rng = stream(17, &[tag::INIT, 3]);
        for t in model.tensors_mut() {
            for v in t.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        model
    }

    fn scrambled_generator(mode: GeneratorMode) -> GeneratorModel {
        let mut model = GeneratorModel::new(3, 6, 18, mode);
        let mut rng = stream(18, &[tag::INIT, 4]);
        for t in model.tensors_mut() {
            for v in t.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        model
    }

    #[test]
    fn predictor_roundtrip_is_bit_exact() {
        let model = scrambled_predictor();
        let mut buf = Vec::new();
        save_predictor(&mut buf, &model).unwrap();
        let loaded = load_predictor(buf.as_slice()).unwrap();
        assert_eq!(loaded.num_classes, model.num_classes);
        for (a, b) in model.tensors().iter().zip(loaded.tensors().iter()) {
            let bits_a: Vec<u64> = a.iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = b.iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn generator_roundtrip_keeps_mode() {
        for mode in [GeneratorMode::PerFeature, GeneratorMode::JointDiagonal] {
            let model = scrambled_generator(mode);
            let mut buf = Vec::new();
            save_generator(&mut buf, &model).unwrap();
            let loaded = load_generator(buf.as_slice()).unwrap();
            assert_eq!(loaded.mode(), mode);
            for (a, b) in model.tensors().iter().zip(loaded.tensors().iter()) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let model = scrambled_predictor();
        save_predictor(std::fs::File::create(&path).unwrap(), &model).unwrap();
        let loaded =
            load_predictor(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
        assert_eq!(loaded.tensors(), model.tensors());
    }

    #[test]
    fn rejects_wrong_kind() {
        let mut buf = Vec::new();
        save_predictor(&mut buf, &scrambled_predictor()).unwrap();
        let err = load_generator(buf.as_slice()).unwrap_err();
        match err {
            ModelError::WrongKind { expected, found } => {
                assert_eq!(expected, "generator");
                assert_eq!(found, "predictor");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_magic() {
        let buf = b"NOPE\x01\x00\x00\x00".to_vec();
        assert!(matches!(
            load_predictor(buf.as_slice()).unwrap_err(),
            ModelError::BadMagic
        ));
    }

    #[test]
    fn rejects_future_version() {
        let mut buf = Vec::new();
        save_predictor(&mut buf, &scrambled_predictor()).unwrap();
        buf[4] = 2;
        match load_predictor(buf.as_slice()).unwrap_err() {
            ModelError::UnsupportedVersion { found, supported } => {
                assert_eq!(found, 2);
                assert_eq!(supported, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn truncation_reports_offset() {
        let mut buf = Vec::new();
        save_predictor(&mut buf, &scrambled_predictor()).unwrap();
        let cut = buf.len() / 2;
        let err = load_predictor(&buf[..cut]).unwrap_err();
        match err {
            ModelError::Truncated { offset } => assert!(offset <= cut as u64),
            other => panic!("unexpected error {other:?}"),
        }
        // Cutting inside the header is reported too.
        let err = load_predictor(&buf[..6]).unwrap_err();
        assert!(matches!(err, ModelError::Truncated { .. }));
    }

    #[test]
    fn rejects_trailing_data() {
        let mut buf = Vec::new();
        save_predictor(&mut buf, &scrambled_predictor()).unwrap();
        buf.push(0);
        assert!(matches!(
            load_predictor(buf.as_slice()).unwrap_err(),
            ModelError::InvalidArgument(_)
        ));
    }

    #[test]
    fn rejects_non_finite_values() {
        let mut buf = Vec::new();
        save_predictor(&mut buf, &scrambled_predictor()).unwrap();
        let tail = buf.len() - 8;
        buf[tail..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(
            load_predictor(buf.as_slice()).unwrap_err(),
            ModelError::InvalidArgument(_)
        ));
    }
}
