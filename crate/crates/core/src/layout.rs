//! Chain geometry: computational units, CU sites, switching stations and labels.
//!
//! The chain is a sequence of 6-cell units `[A, B, A, B, A, B]`. A unit's first
//! A cell (`6u`) is its "position" cell; the other two A cells (`6u+2`, `6u+4`)
//! and all B cells except an active CU are buffers.
//!
//! With switching stations every block is laid out as
//! `[beacon, beacon, label_0 .. label_{w-1}, parity, result, comp_0 .. comp_{L-1}]`
//! where station units store their bit in the position cell. Beacons are
//! always 0; the B-buffer reset temporarily writes a run of three ones over
//! the first beacon unit's buffers and the second beacon, away from payload. The parity cell makes label+parity an even-weight word,
//! so a single flipped bit never reads as a different valid label. The
//! block's CU lives at `6*comp_0 + 1`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::isa::StationCells;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub n_comp: usize,
    /// Computational qubits per block (and stations per next-level CU).
    #[serde(rename = "L")]
    pub block_len: usize,
    pub concat_depth: usize,
    /// Label width in bits; 0 means no switching stations.
    pub ss_width: usize,
    pub margins: usize,
    #[serde(default)]
    pub triple_cu: bool,
}

impl LayoutConfig {
    /// Plain chain of `n_comp` units with a single CU.
    pub fn plain(n_comp: usize) -> Self {
        LayoutConfig { n_comp, block_len: n_comp.max(1), concat_depth: 0, ss_width: 0, margins: 0, triple_cu: false }
    }

    pub fn triple(n_comp: usize, margins: usize) -> Self {
        LayoutConfig { margins, triple_cu: true, ..Self::plain(n_comp) }
    }

    /// Station layout with `n_blocks` blocks of `block_len` qubits.
    pub fn stations(n_blocks: usize, block_len: usize, concat_depth: usize, ss_width: usize) -> Self {
        LayoutConfig { n_comp: n_blocks * block_len, block_len, concat_depth, ss_width, margins: 0, triple_cu: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchingStation {
    pub block: usize,
    /// Reserved A cells: two beacons, the label bits (little-endian), parity, result.
    pub cells: Vec<usize>,
    pub beacon_cells: [usize; 2],
    pub label_cells: Vec<usize>,
    pub parity_index: usize,
    pub label: usize,
    pub result_index: usize,
    pub result: bool,
    pub cu_site: usize,
    /// First unit of the block.
    pub start_unit: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub n: usize,
    pub n_comp: usize,
    #[serde(rename = "L")]
    pub block_len: usize,
    pub concat_depth: usize,
    pub ss_width: usize,
    pub margins: usize,
    pub triple_cu: bool,
    /// Physical index of each computational qubit.
    pub comp: Vec<usize>,
    /// B cell right of each computational qubit.
    pub cu_home: Vec<usize>,
    pub ss: Vec<SwitchingStation>,
    pub units_per_block: usize,
    pub fingerprint: String,
}

/// Canonical hierarchical label of block `k` (block 0 carries the top label).
pub fn canonical_label(k: usize, l: usize, depth: usize) -> usize {
    if k == 0 || l < 2 {
        return depth;
    }
    let (mut v, mut k) = (0, k);
    while k % l == 0 && v < depth {
        k /= l;
        v += 1;
    }
    v
}

/// Three-CU relabelling: nonzero labels gain one; zero labels one or three
/// stations to the right of a nonzero label become 1.
pub fn relabel_for_three_cu(labels: &[usize]) -> Vec<usize> {
    let nz = |j: usize| labels[j] != 0;
    (0..labels.len())
        .map(|j| {
            if nz(j) {
                labels[j] + 1
            } else if (j >= 1 && nz(j - 1)) || (j >= 3 && nz(j - 3)) {
                1
            } else {
                0
            }
        })
        .collect()
}

/// Stations whose label is at least `level` (level 0: all).
pub fn active_from_labels(labels: &[usize], level: usize) -> Vec<usize> {
    (0..labels.len()).filter(|&k| level == 0 || labels[k] >= level).collect()
}

pub fn build_layout(cfg: &LayoutConfig) -> Result<Layout> {
    if cfg.n_comp == 0 {
        return Err(Error::InsufficientLength("n_comp must be positive".into()));
    }
    if cfg.triple_cu {
        if cfg.ss_width > 0 {
            return Err(Error::InvalidArgument("triple-CU layouts are plain chains".into()));
        }
        if cfg.margins < 4 || cfg.n_comp < cfg.margins + 3 {
            return Err(Error::InsufficientLength(format!(
                "triple-CU needs margins >= 4 and n_comp >= margins + 3 (n_comp={}, margins={})",
                cfg.n_comp, cfg.margins
            )));
        }
    }
    let mut lay = if cfg.ss_width == 0 {
        let n_comp = cfg.n_comp;
        Layout {
            n: 6 * n_comp,
            n_comp,
            block_len: n_comp,
            concat_depth: 0,
            ss_width: 0,
            margins: cfg.margins,
            triple_cu: cfg.triple_cu,
            comp: (0..n_comp).map(|u| 6 * u).collect(),
            cu_home: (0..n_comp).map(|u| 6 * u + 1).collect(),
            ss: Vec::new(),
            units_per_block: n_comp,
            fingerprint: String::new(),
        }
    } else {
        station_layout(cfg)?
    };
    lay.fingerprint = lay.compute_fingerprint();
    Ok(lay)
}

fn station_layout(cfg: &LayoutConfig) -> Result<Layout> {
    let (l, w, d) = (cfg.block_len, cfg.ss_width, cfg.concat_depth);
    if l == 0 || cfg.n_comp % l != 0 {
        return Err(Error::InsufficientLength(format!("n_comp {} is not a multiple of L={l}", cfg.n_comp)));
    }
    if d >= 1 << w.min(30) {
        return Err(Error::InvalidArgument(format!("label width {w} cannot hold depth {d}")));
    }
    let n_blocks = cfg.n_comp / l;
    let top_spacing = l.checked_pow(d as u32).unwrap_or(usize::MAX);
    if n_blocks % top_spacing != 0 {
        return Err(Error::InsufficientLength(format!("{n_blocks} blocks is not a multiple of L^depth = {top_spacing}")));
    }
    let upb = 4 + w + l;
    let mut comp = Vec::new();
    let mut ss = Vec::new();
    for b in 0..n_blocks {
        let s = b * upb;
        let label = canonical_label(b, l, d);
        let label_cells: Vec<usize> = (0..w).map(|k| 6 * (s + 2 + k)).collect();
        let parity_index = 6 * (s + 2 + w);
        let result_index = 6 * (s + 3 + w);
        let beacon_cells = [6 * s, 6 * (s + 1)];
        let mut cells = beacon_cells.to_vec();
        cells.extend(&label_cells);
        cells.push(parity_index);
        cells.push(result_index);
        let first = s + 4 + w;
        comp.extend((first..first + l).map(|u| 6 * u));
        ss.push(SwitchingStation {
            block: b,
            cells,
            beacon_cells,
            label_cells,
            parity_index,
            label,
            result_index,
            result: label >= d,
            cu_site: 6 * first + 1,
            start_unit: s,
        });
    }
    let cu_home = comp.iter().map(|c| c + 1).collect();
    Ok(Layout {
        n: 6 * upb * n_blocks,
        n_comp: cfg.n_comp,
        block_len: l,
        concat_depth: d,
        ss_width: w,
        margins: cfg.margins,
        triple_cu: false,
        comp,
        cu_home,
        ss,
        units_per_block: upb,
        fingerprint: String::new(),
    })
}

impl Layout {
    pub fn n_units(&self) -> usize {
        self.n / 6
    }

    pub fn n_blocks(&self) -> usize {
        self.ss.len().max(1)
    }

    pub fn has_stations(&self) -> bool {
        !self.ss.is_empty()
    }

    /// Unit holding computational qubit `q`.
    pub fn unit_of(&self, q: usize) -> usize {
        self.comp[q] / 6
    }

    /// Unit of the (first) CU home: the block's first computational unit.
    pub fn home_unit(&self) -> usize {
        self.comp[0] / 6
    }

    pub fn labels(&self) -> Vec<usize> {
        self.ss.iter().map(|s| s.label).collect()
    }

    pub fn cu_sites(&self) -> Vec<usize> {
        if self.has_stations() {
            self.ss.iter().map(|s| s.cu_site).collect()
        } else {
            vec![self.cu_home[0]]
        }
    }

    /// CU sites whose station label is at least `level`.
    pub fn active_cus(&self, level: usize) -> Result<Vec<usize>> {
        if level > self.concat_depth {
            return Err(Error::LevelOutOfRange { level, depth: self.concat_depth });
        }
        if !self.has_stations() {
            return Ok(self.cu_sites());
        }
        Ok(active_from_labels(&self.labels(), level).into_iter().map(|k| self.ss[k].cu_site).collect())
    }

    /// A cells that are buffers (not position cells of any unit).
    pub fn a_buffers(&self) -> Vec<usize> {
        (0..self.n).step_by(2).filter(|i| i % 6 != 0).collect()
    }

    /// Station bits and CU sites of the level-`level` regime.
    pub fn canonical_bits(&self, level: usize) -> Vec<u8> {
        let mut bits = vec![0u8; self.n];
        for st in &self.ss {
            for (k, &c) in st.label_cells.iter().enumerate() {
                bits[c] = (st.label >> k & 1) as u8;
            }
            bits[st.parity_index] = (st.label.count_ones() % 2) as u8;
            bits[st.result_index] = st.result as u8;
            if level == 0 || st.label >= level {
                bits[st.cu_site] = 1;
            }
        }
        bits
    }

    /// What a DEACTIVATE pulse reads for every station.
    pub fn station_cells(&self) -> Vec<StationCells> {
        self.ss
            .iter()
            .map(|s| StationCells { label_cells: s.label_cells.clone(), parity_cell: Some(s.parity_index), cu_site: s.cu_site })
            .collect()
    }

    /// Canonical value of every reserved cell of station `k`.
    pub fn station_values(&self, k: usize) -> Vec<(usize, u8)> {
        let st = &self.ss[k];
        let mut v = vec![(st.beacon_cells[0], 0), (st.beacon_cells[1], 0)];
        for (b, &c) in st.label_cells.iter().enumerate() {
            v.push((c, (st.label >> b & 1) as u8));
        }
        v.push((st.parity_index, (st.label.count_ones() % 2) as u8));
        v.push((st.result_index, st.result as u8));
        v
    }

    /// Named initial patterns: `all-zero`, `single-CU`, `three-CU`,
    /// `level-<i>` (station layouts).
    pub fn pattern(&self, name: &str) -> Result<Vec<u8>> {
        let mut bits = vec![0u8; self.n];
        match name {
            "all-zero" => {}
            "single-CU" => bits[self.cu_sites()[0]] = 1,
            "three-CU" => {
                if self.n_comp < 4 {
                    return Err(Error::InsufficientMargins("three-CU pattern needs 4 units".into()));
                }
                for off in [0, 1, 3] {
                    bits[self.cu_home[off]] = 1;
                }
            }
            _ => {
                let lvl = name
                    .strip_prefix("level-")
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|_| self.has_stations())
                    .ok_or_else(|| Error::UnknownPattern(name.to_string()))?;
                if lvl > self.concat_depth {
                    return Err(Error::LevelOutOfRange { level: lvl, depth: self.concat_depth });
                }
                bits = self.canonical_bits(lvl);
            }
        }
        Ok(bits)
    }

    fn compute_fingerprint(&self) -> String {
        let mut c = self.clone();
        c.fingerprint.clear();
        let json = serde_json::to_string(&c).expect("layout serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serialises")
    }

    /// Parses a layout file, checking that the stored fingerprint matches.
    pub fn from_json(s: &str) -> Result<Layout> {
        let lay: Layout = serde_json::from_str(s).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        let fp = lay.compute_fingerprint();
        if fp != lay.fingerprint {
            return Err(Error::FingerprintMismatch { program: lay.fingerprint.clone(), layout: fp });
        }
        Ok(lay)
    }
}
