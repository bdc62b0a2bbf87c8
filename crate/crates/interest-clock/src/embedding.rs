//! Embedding tables for every raw feature family, with per-coordinate
//! adaptive-gradient state stored alongside the weights.
//!
//! ID features are hashed into fixed bucket counts with a splitmix64 mixer so
//! lookups are deterministic across runs and platforms.

use std::io::{Read, Write};

use rand::Rng;

use crate::codec;
use crate::error::{Error, Result};
use crate::types::Facet;

/// Identifies one embedding table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TableKey {
    User,
    Item,
    Facet(Facet),
    Hour,
    Day,
    NullTag,
}

impl TableKey {
    pub const ALL: [TableKey; 8] = [
        TableKey::User,
        TableKey::Item,
        TableKey::Facet(Facet::Genre),
        TableKey::Facet(Facet::Mood),
        TableKey::Facet(Facet::Language),
        TableKey::Hour,
        TableKey::Day,
        TableKey::NullTag,
    ];
}

/// One additive contribution of an embedding row to the assembled model
/// input: `x[offset..offset+dim] += coeff * row`. The same triple drives the
/// backward scatter, so gradients through weighted aggregation are exact by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowContribution {
    pub table: TableKey,
    pub row: usize,
    pub offset: usize,
    pub coeff: f64,
}

#[derive(Debug, Clone)]
pub struct Table {
    rows: usize,
    dim: usize,
    weights: Vec<f64>,
    acc: Vec<f64>,
}

impl Table {
    fn new<R: Rng>(rows: usize, dim: usize, init_acc: f64, rng: &mut R) -> Table {
        let weights = (0..rows * dim)
            .map(|_| rng.gen_range(-0.05..=0.05))
            .collect();
        Table {
            rows,
            dim,
            weights,
            acc: vec![init_acc; rows * dim],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.dim..(i + 1) * self.dim]
    }

    /// One adaptive-gradient step on a single row.
    pub fn adagrad_step(&mut self, i: usize, grad: &[f64], lr: f64) {
        debug_assert_eq!(grad.len(), self.dim);
        let base = i * self.dim;
        for (k, g) in grad.iter().enumerate() {
            self.acc[base + k] += g * g;
            self.weights[base + k] -= lr * g / self.acc[base + k].sqrt();
        }
    }

    fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        codec::write_u32(w, self.rows as u32)?;
        codec::write_u32(w, self.dim as u32)?;
        for v in &self.weights {
            codec::write_f64(w, *v)?;
        }
        Ok(())
    }

    fn read<R: Read>(r: &mut R, init_acc: f64) -> Result<Table> {
        let rows = codec::read_u32(r, "table rows")? as usize;
        let dim = codec::read_u32(r, "table dim")? as usize;
        let mut weights = Vec::with_capacity(rows * dim);
        for _ in 0..rows * dim {
            weights.push(codec::read_f64(r, "table weight")?);
        }
        Ok(Table {
            rows,
            dim,
            weights,
            acc: vec![init_acc; rows * dim],
        })
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derive an independent RNG seed from a base seed and a stream salt.
pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(salt))
}

/// All embedding tables of the scoring model.
#[derive(Debug, Clone)]
pub struct EmbeddingTables {
    dim: usize,
    user_mask: u64,
    item_mask: u64,
    user: Table,
    item: Table,
    facets: [Table; 3],
    hour: Table,
    day: Table,
    null_tag: Table,
}

impl EmbeddingTables {
    pub fn new<R: Rng>(
        dim: usize,
        user_hash_bits: u32,
        item_hash_bits: u32,
        vocab_sizes: [usize; 3],
        init_acc: f64,
        rng: &mut R,
    ) -> EmbeddingTables {
        let user_rows = 1usize << user_hash_bits;
        let item_rows = 1usize << item_hash_bits;
        EmbeddingTables {
            dim,
            user_mask: user_rows as u64 - 1,
            item_mask: item_rows as u64 - 1,
            user: Table::new(user_rows, dim, init_acc, rng),
            item: Table::new(item_rows, dim, init_acc, rng),
            facets: [
                Table::new(vocab_sizes[0], dim, init_acc, rng),
                Table::new(vocab_sizes[1], dim, init_acc, rng),
                Table::new(vocab_sizes[2], dim, init_acc, rng),
            ],
            hour: Table::new(24, dim, init_acc, rng),
            day: Table::new(7, dim, init_acc, rng),
            null_tag: Table::new(1, dim, init_acc, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hash_user(&self, user_id: u64) -> usize {
        (splitmix64(user_id) & self.user_mask) as usize
    }

    pub fn hash_item(&self, item_id: u64) -> usize {
        (splitmix64(item_id ^ 0x1745_9df3) & self.item_mask) as usize
    }

    pub fn table(&self, key: TableKey) -> &Table {
        match key {
            TableKey::User => &self.user,
            TableKey::Item => &self.item,
            TableKey::Facet(f) => &self.facets[f.index()],
            TableKey::Hour => &self.hour,
            TableKey::Day => &self.day,
            TableKey::NullTag => &self.null_tag,
        }
    }

    pub fn table_mut(&mut self, key: TableKey) -> &mut Table {
        match key {
            TableKey::User => &mut self.user,
            TableKey::Item => &mut self.item,
            TableKey::Facet(f) => &mut self.facets[f.index()],
            TableKey::Hour => &mut self.hour,
            TableKey::Day => &mut self.day,
            TableKey::NullTag => &mut self.null_tag,
        }
    }

    /// Row lookup with a range check so a mismatched vocabulary surfaces as a
    /// typed error instead of a panic.
    pub fn lookup(&self, key: TableKey, row: usize) -> Result<&[f64]> {
        let table = self.table(key);
        if row >= table.rows() {
            return Err(Error::MissingEmbedding(format!(
                "row {row} out of range for table {key:?} with {} rows",
                table.rows()
            )));
        }
        Ok(table.row(row))
    }

    pub(crate) fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        codec::write_u32(w, self.dim as u32)?;
        codec::write_u64(w, self.user_mask)?;
        codec::write_u64(w, self.item_mask)?;
        for key in TableKey::ALL {
            self.table(key).write(w)?;
        }
        Ok(())
    }

    pub(crate) fn read<R: Read>(r: &mut R, init_acc: f64) -> Result<EmbeddingTables> {
        let dim = codec::read_u32(r, "embedding dim")? as usize;
        let user_mask = codec::read_u64(r, "user mask")?;
        let item_mask = codec::read_u64(r, "item mask")?;
        let user = Table::read(r, init_acc)?;
        let item = Table::read(r, init_acc)?;
        let genre = Table::read(r, init_acc)?;
        let mood = Table::read(r, init_acc)?;
        let language = Table::read(r, init_acc)?;
        let hour = Table::read(r, init_acc)?;
        let day = Table::read(r, init_acc)?;
        let null_tag = Table::read(r, init_acc)?;
        Ok(EmbeddingTables {
            dim,
            user_mask,
            item_mask,
            user,
            item,
            facets: [genre, mood, language],
            hour,
            day,
            null_tag,
        })
    }

    // Flat parameter introspection, used by the finite-difference harness.

    pub fn param_count(&self) -> usize {
        TableKey::ALL
            .iter()
            .map(|k| self.table(*k).weights.len())
            .sum()
    }

    pub fn param(&self, mut i: usize) -> f64 {
        for key in TableKey::ALL {
            let t = self.table(key);
            if i < t.weights.len() {
                return t.weights[i];
            }
            i -= t.weights.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut i: usize, v: f64) {
        for key in TableKey::ALL {
            let len = self.table(key).weights.len();
            if i < len {
                self.table_mut(key).weights[i] = v;
                return;
            }
            i -= len;
        }
        panic!("parameter index out of range");
    }

    /// Flat index of coordinate `k` of `row` in `table`, for targeted
    /// gradient inspection.
    pub fn flat_index(&self, key: TableKey, row: usize, k: usize) -> usize {
        let mut base = 0;
        for other in TableKey::ALL {
            if other == key {
                return base + row * self.dim + k;
            }
            base += self.table(other).weights.len();
        }
        unreachable!()
    }
}
