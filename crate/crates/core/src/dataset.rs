//! Transaction databases: loading, categorical conversion, synthetic
//! generation and the vertical (tid-list) layout used by the search.
//!
//! Items are renumbered into *positions* `0..m` sorted by support
//! descending, ties broken by ascending external id. Every search prefix is
//! a strictly increasing list of positions, so an extension only ever adds
//! items whose support is no larger than any item already present.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// External item identifier, as read from the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u64);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub tid: usize,
    /// Strictly increasing internal positions.
    pub items: Vec<usize>,
}

impl Transaction {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.items.binary_search(&pos).is_ok()
    }
}

/// Immutable horizontal database with items reordered by support.
#[derive(Debug, Clone)]
pub struct TransactionDatabase {
    transactions: Vec<Transaction>,
    supports: Vec<u64>,
    q_max: usize,
    ids: Vec<ItemId>,
    positions: HashMap<ItemId, usize>,
}

impl TransactionDatabase {
    /// Builds a database from raw transactions of external ids. Duplicates
    /// within a transaction are collapsed; items that never occur do not
    /// exist in the universe.
    pub fn from_raw<I, T>(raw: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = ItemId>,
    {
        let mut rows: Vec<Vec<ItemId>> = raw
            .into_iter()
            .map(|t| {
                let mut v: Vec<ItemId> = t.into_iter().collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();

        let mut counts: HashMap<ItemId, u64> = HashMap::new();
        for row in &rows {
            for &id in row {
                *counts.entry(id).or_insert(0) += 1;
            }
        }

        let mut ids: Vec<ItemId> = counts.keys().copied().collect();
        ids.sort_unstable_by(|a, b| counts[b].cmp(&counts[a]).then(a.cmp(b)));
        let positions: HashMap<ItemId, usize> =
            ids.iter().enumerate().map(|(pos, &id)| (id, pos)).collect();
        let supports = ids.iter().map(|id| counts[id]).collect();

        let transactions: Vec<Transaction> = rows
            .iter_mut()
            .enumerate()
            .map(|(tid, row)| {
                let mut items: Vec<usize> = row.iter().map(|id| positions[id]).collect();
                items.sort_unstable();
                Transaction { tid, items }
            })
            .collect();
        let q_max = transactions.iter().map(Transaction::len).max().unwrap_or(0);

        TransactionDatabase {
            transactions,
            supports,
            q_max,
            ids,
            positions,
        }
    }

    /// Number of transactions.
    pub fn n(&self) -> usize {
        self.transactions.len()
    }

    /// Size of the item universe.
    pub fn m(&self) -> usize {
        self.ids.len()
    }

    /// Longest transaction length (0 for an empty or all-empty database).
    pub fn q_max(&self) -> usize {
        self.q_max
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty() || self.ids.is_empty()
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    /// Per-position supports, nonincreasing.
    pub fn supports(&self) -> &[u64] {
        &self.supports
    }

    pub fn support(&self, pos: usize) -> u64 {
        self.supports[pos]
    }

    pub fn item_id(&self, pos: usize) -> ItemId {
        self.ids[pos]
    }

    pub fn position(&self, id: ItemId) -> Option<usize> {
        self.positions.get(&id).copied()
    }

    /// Maps external ids to a sorted list of positions.
    pub fn positions_of(&self, ids: &[ItemId]) -> Result<Vec<usize>> {
        let mut out = ids
            .iter()
            .map(|&id| self.position(id).ok_or(Error::UnknownItem(id.0)))
            .collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn ids_of(&self, positions: &[usize]) -> Vec<ItemId> {
        positions.iter().map(|&p| self.ids[p]).collect()
    }

    /// Writes the database in FIMI format, items in ascending external id.
    pub fn write_fimi<W: Write>(&self, mut out: W) -> Result<()> {
        for t in &self.transactions {
            let mut ids = self.ids_of(&t.items);
            ids.sort_unstable();
            let line: Vec<String> = ids.iter().map(ToString::to_string).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Parses the FIMI flat format: one transaction per line, whitespace
/// separated non-negative integers. Blank lines are empty transactions.
pub fn load_fimi<R: BufRead>(reader: R) -> Result<TransactionDatabase> {
    let mut raw = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u64>().map(ItemId).map_err(|_| Error::Parse {
                    line: i + 1,
                    token: tok.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        raw.push(row);
    }
    Ok(TransactionDatabase::from_raw(raw))
}

pub fn load_fimi_str(text: &str) -> Result<TransactionDatabase> {
    load_fimi(text.as_bytes())
}

/// A database built from attribute-value records, with the
/// `(attribute index, value)` label of every external item id.
#[derive(Debug, Clone)]
pub struct CategoricalDatabase {
    pub db: TransactionDatabase,
    pub labels: Vec<(usize, String)>,
}

impl CategoricalDatabase {
    pub fn label(&self, id: ItemId) -> Option<&(usize, String)> {
        self.labels.get(id.0 as usize)
    }
}

/// Turns each distinct `(attribute, value)` pair into one item. External
/// ids are assigned in order of first appearance. Cells equal to
/// `missing` produce no item.
pub fn convert_categorical<S: AsRef<str>>(
    rows: &[Vec<S>],
    missing: &str,
) -> Result<CategoricalDatabase> {
    let width = rows.first().map_or(0, Vec::len);
    let mut lookup: HashMap<(usize, &str), ItemId> = HashMap::new();
    let mut labels = Vec::new();
    let mut raw = Vec::with_capacity(rows.len());

    for (r, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::Shape {
                row: r,
                expected: width,
                found: row.len(),
            });
        }
        let mut tx = Vec::with_capacity(width);
        for (attr, cell) in row.iter().enumerate() {
            let value = cell.as_ref();
            if value == missing {
                continue;
            }
            let id = *lookup.entry((attr, value)).or_insert_with(|| {
                labels.push((attr, value.to_string()));
                ItemId(labels.len() as u64 - 1)
            });
            tx.push(id);
        }
        raw.push(tx);
    }

    Ok(CategoricalDatabase {
        db: TransactionDatabase::from_raw(raw),
        labels,
    })
}

/// Reads CSV records and converts them with [`convert_categorical`].
pub fn load_categorical_csv<R: Read>(
    reader: R,
    has_header: bool,
    missing: &str,
) -> Result<CategoricalDatabase> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }
    convert_categorical(&rows, missing)
}

/// Independent Bernoulli(`density`) inclusion of each of `m` items in each of
/// `n` transactions. External ids are `0..m`.
pub fn generate_synthetic(
    n: usize,
    m: usize,
    density: f64,
    seed: u64,
) -> Result<TransactionDatabase> {
    if n == 0 || m == 0 {
        return Err(Error::Param(format!(
            "n and m must be positive (n={n}, m={m})"
        )));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Param(format!("density {density} outside (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Vec<ItemId>> = (0..n)
        .map(|_| {
            (0..m as u64)
                .filter(|_| rng.gen_bool(density))
                .map(ItemId)
                .collect()
        })
        .collect();
    Ok(TransactionDatabase::from_raw(raw))
}

/// Per-position sorted tid lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerticalIndex {
    tidlists: Vec<Vec<u32>>,
}

impl VerticalIndex {
    pub fn build(db: &TransactionDatabase) -> Self {
        let mut tidlists: Vec<Vec<u32>> = db
            .supports()
            .iter()
            .map(|&s| Vec::with_capacity(s as usize))
            .collect();
        for t in db.transactions() {
            for &pos in &t.items {
                tidlists[pos].push(t.tid as u32);
            }
        }
        VerticalIndex { tidlists }
    }

    pub fn tidlist(&self, pos: usize) -> &[u32] {
        &self.tidlists[pos]
    }

    pub fn len(&self) -> usize {
        self.tidlists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tidlists.is_empty()
    }

    /// Rebuilds the horizontal form (positions per tid) for `n` transactions.
    pub fn to_horizontal(&self, n: usize) -> Vec<Vec<usize>> {
        let mut rows = vec![Vec::new(); n];
        for (pos, tids) in self.tidlists.iter().enumerate() {
            for &tid in tids {
                rows[tid as usize].push(pos);
            }
        }
        rows
    }
}
