//! `TOY1` weight container for toy models.
//!
//! Layout (little-endian, no padding): magic `"TOY1"`, u32 tensor count, a
//! shape table (per tensor: u32 rank then rank u32 dims), then the tensor
//! payloads as f32 arrays in table order.
//!
//! Tensor order: meta `[vocab, d, n_layers, max_len, pos_scale]`, token
//! embedding, per layer (mix, w1, b1, w2, b2), unembedding, and for planted
//! models plant meta `[layer, gain, trigger, trigger_strength]`, direction,
//! style-A ids, style-B ids.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};
use crate::tensor_io::{
    expect_eof, expect_magic, read_f32_array, read_u32, write_f32_array, write_magic, write_u32,
};

use super::{LayerParams, PlantedStyle, ToyModelParams};

pub const TOY_MAGIC: [u8; 4] = *b"TOY1";

struct TensorWriter<'a, W: Write> {
    out: &'a mut W,
    shapes: Vec<Vec<u32>>,
    payloads: Vec<Vec<f64>>,
}

impl<'a, W: Write> TensorWriter<'a, W> {
    fn push(&mut self, shape: Vec<u32>, data: Vec<f64>) {
        debug_assert_eq!(
            shape.iter().map(|&x| x as usize).product::<usize>(),
            data.len()
        );
        self.shapes.push(shape);
        self.payloads.push(data);
    }

    fn finish(self) -> Result<()> {
        write_u32(self.out, self.shapes.len() as u32)?;
        for shape in &self.shapes {
            write_u32(self.out, shape.len() as u32)?;
            for &dim in shape {
                write_u32(self.out, dim)?;
            }
        }
        for payload in &self.payloads {
            write_f32_array(self.out, payload)?;
        }
        Ok(())
    }
}

/// Serialize model weights; values are quantized to f32 on disk.
pub fn save_model<P: AsRef<Path>>(params: &ToyModelParams, path: P) -> Result<()> {
    params.validate()?;
    let mut file = BufWriter::new(File::create(path)?);
    write_magic(&mut file, &TOY_MAGIC)?;
    let mut w = TensorWriter {
        out: &mut file,
        shapes: Vec::new(),
        payloads: Vec::new(),
    };
    w.push(
        vec![5],
        vec![
            params.vocab_size as f64,
            params.d as f64,
            params.n_layers() as f64,
            params.max_len as f64,
            params.pos_scale,
        ],
    );
    w.push(
        vec![params.vocab_size as u32, params.d as u32],
        params.token_embedding.as_slice().to_vec(),
    );
    let d = params.d as u32;
    for layer in &params.layers {
        w.push(vec![d, d], layer.mix.as_slice().to_vec());
        w.push(vec![d, 4 * d], layer.w1.as_slice().to_vec());
        w.push(vec![4 * d], layer.b1.as_slice().to_vec());
        w.push(vec![4 * d, d], layer.w2.as_slice().to_vec());
        w.push(vec![d], layer.b2.as_slice().to_vec());
    }
    w.push(
        vec![d, params.vocab_size as u32],
        params.unembedding.as_slice().to_vec(),
    );
    if let Some(plant) = &params.planted {
        w.push(
            vec![4],
            vec![
                plant.layer as f64,
                plant.gain,
                plant.trigger as f64,
                plant.trigger_strength,
            ],
        );
        w.push(vec![d], plant.direction.as_slice().to_vec());
        w.push(
            vec![plant.style_a.len() as u32],
            plant.style_a.iter().map(|&t| t as f64).collect(),
        );
        w.push(
            vec![plant.style_b.len() as u32],
            plant.style_b.iter().map(|&t| t as f64).collect(),
        );
    }
    w.finish()
}

struct TensorReader<R: Read> {
    input: R,
    shapes: std::collections::VecDeque<Vec<u32>>,
}

impl<R: Read> TensorReader<R> {
    fn next(&mut self, context: &str) -> Result<(Vec<u32>, Vec<f64>)> {
        let shape = self
            .shapes
            .pop_front()
            .ok_or_else(|| Error::FileShape(format!("{context}: tensor table exhausted")))?;
        let len = shape.iter().map(|&x| x as usize).product();
        let data = read_f32_array(&mut self.input, len)?;
        Ok((shape, data))
    }

    fn next_matrix(&mut self, context: &str, rows: usize, cols: usize) -> Result<Matrix> {
        let (shape, data) = self.next(context)?;
        if shape != [rows as u32, cols as u32] {
            return Err(Error::FileShape(format!(
                "{context}: expected {rows}x{cols}, found {shape:?}"
            )));
        }
        Matrix::from_vec(rows, cols, data)
    }

    fn next_vector(&mut self, context: &str, len: usize) -> Result<Vector> {
        let (shape, data) = self.next(context)?;
        if shape != [len as u32] {
            return Err(Error::FileShape(format!(
                "{context}: expected [{len}], found {shape:?}"
            )));
        }
        Ok(Vector::new(data))
    }
}

/// Load model weights saved by [`save_model`].
pub fn load_model<P: AsRef<Path>>(path: P) -> Result<ToyModelParams> {
    let mut file = BufReader::new(File::open(path)?);
    expect_magic(&mut file, &TOY_MAGIC)?;
    let count = read_u32(&mut file)? as usize;
    let mut shapes = std::collections::VecDeque::with_capacity(count);
    for _ in 0..count {
        let rank = read_u32(&mut file)? as usize;
        if rank > 4 {
            return Err(Error::FileShape(format!("implausible tensor rank {rank}")));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(read_u32(&mut file)?);
        }
        shapes.push_back(dims);
    }
    let mut r = TensorReader {
        input: file,
        shapes,
    };

    let (meta_shape, meta) = r.next("meta")?;
    if meta_shape != [5] {
        return Err(Error::FileShape(format!(
            "meta tensor must be [5], found {meta_shape:?}"
        )));
    }
    let vocab_size = meta[0] as usize;
    let d = meta[1] as usize;
    let n_layers = meta[2] as usize;
    let max_len = meta[3] as usize;
    let pos_scale = meta[4];
    if vocab_size == 0 || d == 0 || n_layers == 0 {
        return Err(Error::FileShape("degenerate model dimensions".into()));
    }
    let expected_tensors = 3 + 5 * n_layers;
    if count != expected_tensors && count != expected_tensors + 4 {
        return Err(Error::FileShape(format!(
            "tensor count {count} matches neither plain ({expected_tensors}) nor planted ({})",
            expected_tensors + 4
        )));
    }

    let token_embedding = r.next_matrix("embedding", vocab_size, d)?;
    let mut layers = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        layers.push(LayerParams {
            mix: r.next_matrix(&format!("layer {l} mix"), d, d)?,
            w1: r.next_matrix(&format!("layer {l} w1"), d, 4 * d)?,
            b1: r.next_vector(&format!("layer {l} b1"), 4 * d)?,
            w2: r.next_matrix(&format!("layer {l} w2"), 4 * d, d)?,
            b2: r.next_vector(&format!("layer {l} b2"), d)?,
        });
    }
    let unembedding = r.next_matrix("unembedding", d, vocab_size)?;

    let planted = if count == expected_tensors + 4 {
        let (shape, pm) = r.next("plant meta")?;
        if shape != [4] {
            return Err(Error::FileShape("plant meta must be [4]".into()));
        }
        let direction = r.next_vector("plant direction", d)?;
        let (_, a) = r.next("style a")?;
        let (_, b) = r.next("style b")?;
        Some(PlantedStyle {
            layer: pm[0] as usize,
            direction,
            style_a: a.iter().map(|&t| t as u32).collect(),
            style_b: b.iter().map(|&t| t as u32).collect(),
            gain: pm[1],
            trigger: pm[2] as u32,
            trigger_strength: pm[3],
        })
    } else {
        None
    };

    expect_eof(&mut r.input, "TOY1")?;
    let params = ToyModelParams {
        vocab_size,
        d,
        max_len,
        pos_scale,
        token_embedding,
        layers,
        unembedding,
        planted,
    };
    params.validate()?;
    Ok(params)
}
