//! Brute-force reference implementation used by the oracle and acceptance
//! tests. It works from the raw bundle files only (linear scans, digit
//! arithmetic for the body tree) and never calls the engine's distance code.

#![allow(dead_code, clippy::needless_range_loop)]

use symdist::kb::BundleFiles;
use symdist::ElementKind;

pub struct OracleTable {
    d_min: f64,
    d_max: f64,
    tree_defaults: bool,
    entries: Vec<(u32, u32, f64)>,
}

pub struct Oracle {
    tables: Vec<OracleTable>,
    ontology: Vec<u32>,
}

fn depth(code: u32) -> u32 {
    if code.is_multiple_of(100) {
        1
    } else if code.is_multiple_of(10) {
        2
    } else {
        3
    }
}

fn ancestors(code: u32) -> Vec<u32> {
    let mut out = vec![code];
    if depth(code) == 3 {
        out.push(code / 10 * 10);
    }
    if depth(code) >= 2 {
        out.push(code / 100 * 100);
    }
    out
}

fn tree_hops(a: u32, b: u32) -> Option<u32> {
    if a / 100 != b / 100 {
        return None;
    }
    let (ua, ub) = (ancestors(a), ancestors(b));
    let lca = ua.iter().find(|x| ub.contains(x)).copied()?;
    Some(depth(a) + depth(b) - 2 * depth(lca))
}

impl Oracle {
    pub fn new(files: &BundleFiles) -> Self {
        let mut tables: Vec<_> = files.relations.iter().collect();
        tables.sort_by_key(|t| t.element_index);
        let tables = tables
            .into_iter()
            .map(|t| OracleTable {
                d_min: t.d_min,
                d_max: t.d_max,
                tree_defaults: files.schema[t.element_index - 1].kind == ElementKind::Where
                    && t.ontology_defaults.unwrap_or(true),
                entries: t.entries.iter().map(|e| (e.a, e.b, e.d)).collect(),
            })
            .collect();
        Oracle {
            tables,
            ontology: files.ontology.iter().map(|n| n.code).collect(),
        }
    }

    pub fn element(&self, k: usize, a: u32, b: u32) -> f64 {
        if a == b {
            return 0.0;
        }
        let t = &self.tables[k];
        for &(x, y, d) in &t.entries {
            if (x, y) == (a, b) || (x, y) == (b, a) {
                return d;
            }
        }
        if t.tree_defaults && self.ontology.contains(&a) && self.ontology.contains(&b) {
            if let Some(h) = tree_hops(a, b) {
                let step = (t.d_max - t.d_min) / 3.0;
                return t.d_min + (h - 1) as f64 * step;
            }
        }
        t.d_max
    }

    pub fn symptom(&self, x: &[u32], y: &[u32]) -> f64 {
        let mut sum = 0.0;
        for k in 0..x.len() {
            let d = self.element(k, x[k], y[k]);
            sum += d * d;
        }
        sum.sqrt()
    }

    /// Fill the whole |P| x |D| matrix, then take row and column minima.
    pub fn list(&self, p: &[Vec<u32>], d: &[Vec<u32>], lambda: f64) -> f64 {
        let m: Vec<Vec<f64>> = p.iter().map(|x| d.iter().map(|y| self.symptom(x, y)).collect()).collect();
        let mut forward = 0.0;
        for row in &m {
            forward += row.iter().copied().fold(f64::INFINITY, f64::min);
        }
        let mut backward = 0.0;
        for j in 0..d.len() {
            backward += (0..p.len()).map(|i| m[i][j]).fold(f64::INFINITY, f64::min);
        }
        forward / p.len() as f64 + lambda * (backward / d.len() as f64)
    }

    /// Every disease scored, sorted by (distance, id), truncated to k.
    pub fn rank(&self, p: &[Vec<u32>], diseases: &[(String, Vec<Vec<u32>>)], lambda: f64, k: usize) -> Vec<(String, f64)> {
        let mut scored: Vec<(String, f64)> = diseases
            .iter()
            .map(|(id, d)| (id.clone(), self.list(p, d, lambda)))
            .collect();
        scored.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        scored.truncate(k);
        scored
    }
}

pub fn disease_lists(kb: &symdist::KnowledgeBase) -> Vec<(String, Vec<Vec<u32>>)> {
    kb.diseases()
        .iter()
        .map(|d| (d.id.clone(), d.symptoms.iter().map(|s| s.0.clone()).collect()))
        .collect()
}

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}
