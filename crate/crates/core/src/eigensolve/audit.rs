//! Process-wide dense cross-check of inertia counts.
//!
//! When enabled, every [`InertiaCounter`](super::InertiaCounter) on an
//! operator of dimension at most [`AUDIT_MAX_DIM`] computes its full
//! spectrum once by orthogonal reduction (see [`reference`](super::reference))
//! and compares each count it produces against that spectrum.

use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, LazyLock, Mutex};

use super::reference::reference_spectrum;
use crate::sparse::{CsrMatrix, Scalar};

pub const AUDIT_MAX_DIM: usize = 2000;

static ENABLED: AtomicBool = AtomicBool::new(false);
// counters are often rebuilt for an operator seen before
type SpectrumCache = HashMap<(usize, u64), Arc<Vec<f64>>>;
static SPECTRA: LazyLock<Mutex<SpectrumCache>> = LazyLock::new(Default::default);
static LOG: Mutex<AuditLog> = Mutex::new(AuditLog {
    checked: 0,
    ties: 0,
    mismatches: Vec::new(),
});

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuditLog {
    pub checked: usize,
    /// counts at a shift within the backward error of a reference eigenvalue
    /// (not compared)
    pub ties: usize,
    pub mismatches: Vec<Mismatch>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub dim: usize,
    pub shift: f64,
    pub factored: usize,
    pub dense: usize,
}

pub fn enable() {
    ENABLED.store(true, Ordering::SeqCst);
}

pub fn disable() {
    ENABLED.store(false, Ordering::SeqCst);
}

pub fn enabled() -> bool {
    ENABLED.load(Ordering::SeqCst)
}

pub fn snapshot() -> AuditLog {
    LOG.lock().unwrap().clone()
}

pub fn reset() {
    *LOG.lock().unwrap() = AuditLog::default();
    SPECTRA.lock().unwrap().clear();
}

/// Reference spectrum of `a`, shared between counters on equal matrices.
pub(crate) fn spectrum<T: Scalar>(a: &CsrMatrix<T>) -> Arc<Vec<f64>> {
    let mut h = DefaultHasher::new();
    a.indptr().hash(&mut h);
    a.indices().hash(&mut h);
    for v in a.data() {
        let z = v.to_complex();
        (z.re.to_bits(), z.im.to_bits()).hash(&mut h);
    }
    let key = (a.dim(), h.finish());
    if let Some(s) = SPECTRA.lock().unwrap().get(&key) {
        return s.clone();
    }
    let s = Arc::new(reference_spectrum(a));
    SPECTRA.lock().unwrap().insert(key, s.clone());
    s
}

/// Compares a factored count below `shift` against a sorted reference
/// spectrum of a matrix with norm `scale`.
pub(crate) fn record(dense: &[f64], scale: f64, shift: f64, factored: usize) {
    let tie = 64.0 * f64::EPSILON * dense.len() as f64 * scale.max(1.0);
    let dense_count = dense.partition_point(|&e| e < shift);
    let near = dense.iter().any(|&e| (e - shift).abs() <= tie);
    let mut log = LOG.lock().unwrap();
    if near {
        log.ties += 1;
        return;
    }
    log.checked += 1;
    if dense_count != factored {
        log.mismatches.push(Mismatch {
            dim: dense.len(),
            shift,
            factored,
            dense: dense_count,
        });
    }
}
