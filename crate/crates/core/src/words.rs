//! Generator systems, reduced words, and orbit tables: ball enumeration with
//! incremental products, free-group collision detection, and coset
//! deduplication.

use crate::boundary::Flag;
use crate::error::{Error, Result};
use crate::group::{
    cartan_projection, is_loxodromic, jordan_projection, kak_decompose, CartanVector,
    GroupDescriptor, GroupElement,
};
use crate::linalg::Mat;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Entry magnitude above which enumeration aborts with an overflow error.
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// Reduced word in the generators: signed 1-based indices, letter `-i`
/// denoting the inverse of generator `i-1`. No adjacent `(i, -i)` pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<i16>);

impl Word {
    pub fn new(letters: Vec<i16>) -> Self {
        Word(reduce(&letters))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&l| -l).collect())
    }
}

/// Free reduction of a letter sequence.
pub fn reduce(letters: &[i16]) -> Vec<i16> {
    let mut out: Vec<i16> = Vec::with_capacity(letters.len());
    for &l in letters {
        if l == 0 {
            continue;
        }
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Reduced concatenation of two already-reduced words.
pub fn reduce_concat(a: &[i16], b: &[i16]) -> Vec<i16> {
    let mut out = a.to_vec();
    for &l in b {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Labeled loxodromic generators with precomputed inverses.
#[derive(Clone, Debug)]
pub struct GeneratorSystem {
    pub descriptor: GroupDescriptor,
    pub labels: Vec<String>,
    pub generators: Vec<GroupElement>,
    pub inverses: Vec<GroupElement>,
    /// Non-fatal validation notes (e.g. a generator failing the loxodromy
    /// margin).
    pub warnings: Vec<String>,
}

impl GeneratorSystem {
    /// Builds a system from labeled elements. Schottky machinery requires at
    /// least two generators, but a single generator is accepted for cyclic
    /// fixtures; `schottky_check` enforces p >= 2 separately.
    pub fn new(
        descriptor: GroupDescriptor,
        labeled: Vec<(String, GroupElement)>,
        loxodromy_margin: f64,
    ) -> Result<Self> {
        if labeled.is_empty() {
            return Err(Error::InvalidInput("at least one generator required".into()));
        }
        let mut labels = Vec::new();
        let mut generators = Vec::new();
        let mut warnings = Vec::new();
        for (label, g) in labeled {
            if g.descriptor != descriptor {
                return Err(Error::InvalidInput(format!(
                    "generator {label} has mismatched descriptor"
                )));
            }
            if !is_loxodromic(&g, loxodromy_margin) {
                warnings.push(format!(
                    "generator {label} fails the loxodromy margin {loxodromy_margin}"
                ));
            }
            labels.push(label);
            generators.push(g);
        }
        let inverses = generators.iter().map(|g| g.inverse()).collect();
        Ok(GeneratorSystem { descriptor, labels, generators, inverses, warnings })
    }

    pub fn p(&self) -> usize {
        self.generators.len()
    }

    pub fn letter(&self, l: i16) -> Result<&GroupElement> {
        let idx = l.unsigned_abs() as usize;
        if l == 0 || idx > self.generators.len() {
            return Err(Error::InvalidInput(format!("letter {l} out of range")));
        }
        Ok(if l > 0 { &self.generators[idx - 1] } else { &self.inverses[idx - 1] })
    }

    /// Product of the word's letters. Valid by construction; no revalidation.
    pub fn element_of_word(&self, word: &[i16]) -> Result<GroupElement> {
        let mut acc = GroupElement::identity(&self.descriptor);
        for &l in word {
            acc = acc.mul(self.letter(l)?);
        }
        Ok(acc)
    }

    /// All letters in ascending i16 order: -p..-1, 1..p.
    pub fn letters(&self) -> Vec<i16> {
        let p = self.p() as i16;
        (-p..=p).filter(|&l| l != 0).collect()
    }

    /// Content digest of the generator matrices and a depth, used to key
    /// orbit caches.
    pub fn digest(&self, depth: u32) -> [u8; 32] {
        let mut h = Sha256::new();
        for &d in &self.descriptor.factor_dims {
            h.update((d as u32).to_le_bytes());
        }
        for &p in &self.descriptor.projective_flags {
            h.update([p as u8]);
        }
        for g in &self.generators {
            for f in &g.factors {
                for &x in &f.data {
                    h.update(x.to_le_bytes());
                }
            }
        }
        h.update(depth.to_le_bytes());
        h.finalize().into()
    }
}

/// One enumerated orbit point.
#[derive(Clone, Debug)]
pub struct OrbitRow {
    pub word: Vec<i16>,
    pub mu: CartanVector,
    pub lambda: CartanVector,
    pub flag: Option<Flag>,
}

/// Ball of reduced words with their projections, sorted lexicographically by
/// word.
#[derive(Clone, Debug)]
pub struct OrbitTable {
    pub descriptor: GroupDescriptor,
    pub p: usize,
    pub depth: u32,
    pub digest: [u8; 32],
    pub rows: Vec<OrbitRow>,
}

impl OrbitTable {
    /// Number of reduced words of length exactly `k` over `p` free generators.
    pub fn expected_count(p: usize, k: u32) -> u128 {
        if k == 0 {
            return 1;
        }
        let two_p = 2 * p as u128;
        let mut n = two_p;
        for _ in 1..k {
            n *= two_p - 1;
        }
        n
    }

    pub fn expected_total(p: usize, depth: u32) -> u128 {
        (0..=depth).map(|k| Self::expected_count(p, k)).sum()
    }

    pub fn max_mu_norm(&self) -> f64 {
        self.rows.iter().map(|r| r.mu.norm()).fold(0.0, f64::max)
    }
}

/// Options for `enumerate_ball`.
#[derive(Clone, Debug)]
pub struct EnumerateOptions {
    pub with_flags: bool,
    pub threads: usize,
    /// Memory budget in bytes for the row storage estimate.
    pub memory_budget: u64,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions { with_flags: false, threads: 1, memory_budget: 4 << 30 }
    }
}

fn row_bytes_estimate(descriptor: &GroupDescriptor, depth: u32, with_flags: bool) -> u64 {
    let coords = descriptor.coord_len() as u64;
    let frames: u64 = descriptor.factor_dims.iter().map(|&d| (d * d) as u64).sum();
    // word letters + two coordinate vectors + Vec/struct overheads
    let base = 2 * depth as u64 + 16 * coords + 120;
    if with_flags {
        base + 8 * frames + 64
    } else {
        base
    }
}

struct Shard {
    rows: Vec<OrbitRow>,
    hashes: Vec<u64>,
}

fn quantized_hash(g: &GroupElement) -> u64 {
    // FNV-1a over 1e-9-grid-quantized entries; collisions are re-verified.
    // Projective factors are sign-canonicalized first so PSL-equal elements
    // hash alike.
    let mut h: u64 = 0xcbf29ce484222325;
    for (f, m) in g.factors.iter().enumerate() {
        let canon;
        let m = if g.descriptor.projective_flags[f] {
            canon = crate::group::projective_canonicalize(m.clone());
            &canon
        } else {
            m
        };
        for &x in &m.data {
            let q = (x * 1e9).round();
            let bits = if q.abs() < 9.0e18 { (q as i64) as u64 } else { x.to_bits() };
            for b in bits.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
    }
    h
}

fn emit_row(
    word: &[i16],
    g: &GroupElement,
    with_flags: bool,
    rows: &mut Vec<OrbitRow>,
    hashes: &mut Vec<u64>,
) -> Result<()> {
    if g.max_abs() > OVERFLOW_LIMIT {
        return Err(Error::Overflow { word: word.to_vec(), limit: OVERFLOW_LIMIT });
    }
    let mu = cartan_projection(g)?;
    let lambda = jordan_projection(g)?;
    let flag = if with_flags {
        let kak = kak_decompose(g)?;
        Some(Flag::from_element(&kak.k1))
    } else {
        None
    };
    hashes.push(quantized_hash(g));
    rows.push(OrbitRow { word: word.to_vec(), mu, lambda, flag });
    Ok(())
}

fn dfs_subtree(
    gens: &GeneratorSystem,
    prefix: &[i16],
    prefix_product: &GroupElement,
    depth: u32,
    with_flags: bool,
    rows: &mut Vec<OrbitRow>,
    hashes: &mut Vec<u64>,
) -> Result<()> {
    emit_row(prefix, prefix_product, with_flags, rows, hashes)?;
    if prefix.len() as u32 >= depth {
        return Ok(());
    }
    let last = *prefix.last().expect("subtree prefixes are non-empty");
    let mut word = prefix.to_vec();
    for l in gens.letters() {
        if l == -last {
            continue;
        }
        word.push(l);
        let product = prefix_product.mul(gens.letter(l)?);
        dfs_subtree(gens, &word, &product, depth, with_flags, rows, hashes)?;
        word.pop();
    }
    Ok(())
}

/// Enumerates all reduced words of length <= `depth` with their Cartan and
/// Jordan projections (and attracting flags when requested), deterministically
/// and independently of the worker count.
///
/// Work is partitioned by two-letter prefix; each worker emits a shard already
/// in lexicographic order and shards are concatenated in prefix order.
pub fn enumerate_ball(
    gens: &GeneratorSystem,
    depth: u32,
    options: &EnumerateOptions,
) -> Result<OrbitTable> {
    let estimate =
        OrbitTable::expected_total(gens.p(), depth).saturating_mul(row_bytes_estimate(
            &gens.descriptor,
            depth,
            options.with_flags,
        ) as u128);
    if estimate > options.memory_budget as u128 {
        return Err(Error::ResourceBudget(format!(
            "estimated {estimate} bytes for depth {depth} exceeds budget {}",
            options.memory_budget
        )));
    }

    let identity = GroupElement::identity(&gens.descriptor);
    let mut head_rows = Vec::new();
    let mut head_hashes = Vec::new();
    emit_row(&[], &identity, options.with_flags, &mut head_rows, &mut head_hashes)?;

    // Subtree roots: single letters when depth <= 1 would make them leaves,
    // otherwise two-letter prefixes for better balance.
    let mut tasks: Vec<(Vec<i16>, GroupElement)> = Vec::new();
    if depth >= 1 {
        for a in gens.letters() {
            let ga = gens.letter(a)?.clone();
            if depth == 1 {
                emit_row(&[a], &ga, options.with_flags, &mut head_rows, &mut head_hashes)?;
            } else {
                emit_row(&[a], &ga, options.with_flags, &mut head_rows, &mut head_hashes)?;
                for b in gens.letters() {
                    if b == -a {
                        continue;
                    }
                    tasks.push((vec![a, b], ga.mul(gens.letter(b)?)));
                }
            }
        }
    }

    let threads = options.threads.max(1);
    let n_tasks = tasks.len();
    let shards: Vec<Mutex<Option<Result<Shard>>>> =
        (0..n_tasks).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(n_tasks.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n_tasks {
                    break;
                }
                let (prefix, product) = &tasks[i];
                let mut rows = Vec::new();
                let mut hashes = Vec::new();
                let res = dfs_subtree(
                    gens,
                    prefix,
                    product,
                    depth,
                    options.with_flags,
                    &mut rows,
                    &mut hashes,
                )
                .map(|()| Shard { rows, hashes });
                *shards[i].lock().unwrap() = Some(res);
            });
        }
    });

    // Merge: identity and single letters interleave with the two-letter
    // subtrees in lexicographic order; sorting the assembled rows by word is
    // simplest and deterministic.
    let mut rows = head_rows;
    let mut hashes = head_hashes;
    for slot in shards {
        let shard = slot.into_inner().unwrap().expect("worker ran")?;
        rows.extend(shard.rows);
        hashes.extend(shard.hashes);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&i, &j| rows[i].word.cmp(&rows[j].word));
    let rows: Vec<OrbitRow> = {
        let mut tmp: Vec<Option<OrbitRow>> = rows.into_iter().map(Some).collect();
        order.iter().map(|&i| tmp[i].take().unwrap()).collect()
    };
    let hashes: Vec<u64> = order.iter().map(|&i| hashes[i]).collect();

    // Free-group diagnostic: two distinct reduced words with the same
    // quantized matrix abort enumeration. Only meaningful at moderate entry
    // scale: strong contraction pushes the difference of distinct deep words
    // below one ulp, so matches between large matrices are not evidence of a
    // relation.
    let mut seen: HashMap<u64, usize> = HashMap::with_capacity(rows.len());
    for (i, &h) in hashes.iter().enumerate() {
        if let Some(&j) = seen.get(&h) {
            let gi = gens.element_of_word(&rows[i].word)?;
            let gj = gens.element_of_word(&rows[j].word)?;
            let scale = gi.max_abs().max(gj.max_abs());
            if scale < 1e6 && gi.dist(&gj) < 1e-7 * (1.0 + scale) {
                return Err(Error::NonFreeInput(rows[j].word.clone(), rows[i].word.clone()));
            }
        } else {
            seen.insert(h, i);
        }
    }

    Ok(OrbitTable {
        descriptor: gens.descriptor.clone(),
        p: gens.p(),
        depth,
        digest: gens.digest(depth),
        rows,
    })
}

/// H-coset invariant used by `dedup_cosets`.
#[derive(Clone, Debug)]
pub enum CosetInvariant {
    /// gamma -> gamma^T J gamma with J = diag(I_p, -I_q), applied per factor.
    OrthogonalForm { p: usize, q: usize },
    /// (g1, g2) -> g2^{-1} g1 for two-factor groups.
    FactorRatio,
}

fn quantize_key(values: impl Iterator<Item = f64>) -> Result<Vec<i128>> {
    let mut key = Vec::new();
    for x in values {
        if x.abs() > 1e28 {
            return Err(Error::Numerical(
                "coset invariant entry too large for 1e-9 quantization".into(),
            ));
        }
        key.push((x * 1e9).round() as i128);
    }
    Ok(key)
}

/// Keeps one representative row per value of the coset invariant, quantized to
/// a 1e-9 grid. The representative is the lexicographically least word, which
/// is the first one encountered in a sorted table.
pub fn dedup_cosets(
    table: &OrbitTable,
    gens: &GeneratorSystem,
    invariant: &CosetInvariant,
) -> Result<OrbitTable> {
    match invariant {
        CosetInvariant::OrthogonalForm { p, q } => {
            for &d in &table.descriptor.factor_dims {
                if p + q != d {
                    return Err(Error::Config(format!(
                        "orthogonal form ({p},{q}) does not match factor dimension {d}"
                    )));
                }
            }
        }
        CosetInvariant::FactorRatio => {
            if table.descriptor.num_factors() != 2
                || table.descriptor.factor_dims[0] != table.descriptor.factor_dims[1]
            {
                return Err(Error::Config(
                    "factor-ratio invariant requires two factors of equal dimension".into(),
                ));
            }
        }
    }
    let mut seen: HashMap<Vec<i128>, ()> = HashMap::new();
    let mut rows = Vec::new();
    for row in &table.rows {
        let g = gens.element_of_word(&row.word)?;
        let key = match invariant {
            CosetInvariant::OrthogonalForm { p, q } => {
                let mut vals = Vec::new();
                for m in &g.factors {
                    let d = m.rows;
                    let mut j = Mat::zeros(d, d);
                    for i in 0..d {
                        j[(i, i)] = if i < *p { 1.0 } else { -1.0 };
                    }
                    let _ = q;
                    let form = m.transpose().mul(&j).mul(m);
                    vals.extend(form.data.iter().copied());
                }
                quantize_key(vals.into_iter())?
            }
            CosetInvariant::FactorRatio => {
                // Unimodular factor: the adjugate is the inverse and stays
                // accurate for deep rows.
                let ratio = g.factors[1].adjugate().mul(&g.factors[0]);
                quantize_key(ratio.data.iter().copied())?
            }
        };
        if seen.insert(key, ()).is_none() {
            rows.push(row.clone());
        }
    }
    Ok(OrbitTable {
        descriptor: table.descriptor.clone(),
        p: table.p,
        depth: table.depth,
        digest: table.digest,
        rows,
    })
}
