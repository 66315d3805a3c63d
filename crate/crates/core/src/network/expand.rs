//! Exact rewriting of a complex HoloNet as a real one of twice the width.
//!
//! Features `X = A + iB` become the real matrix `[A | B]`. A complex weight
//! `W = U + iV` acting by right multiplication turns into
//!
//! ```text
//! [A | B] · ⎡ U  V ⎤  =  [AU − BV | AV + BU]
//!           ⎣−V  U ⎦
//! ```
//!
//! which is the stacked form of `XW` whenever the filter atoms are real. The
//! split activations act entrywise and commute with the stacking.

use super::model::{HoloNetModel, LayerParams, ModelConfig, ReadoutKind};
use super::{NetworkError, ScalarField};
use crate::cmat::CMat;
use nalgebra::DMatrix;

fn block(w: &CMat) -> CMat {
    let (r, c) = w.shape();
    let u = w.re();
    let v = w.im_or_zeros();
    let mut e = DMatrix::zeros(2 * r, 2 * c);
    e.view_mut((0, 0), (r, c)).copy_from(u);
    e.view_mut((0, c), (r, c)).copy_from(&v);
    e.view_mut((r, 0), (r, c)).copy_from(&(-&v));
    e.view_mut((r, c), (r, c)).copy_from(u);
    CMat::from_real(e)
}

/// Real model of widths `2·F_ℓ` whose output on `[Re X | Im X]` is the
/// stacked output of `model` on `X`.
///
/// Node readouts carry over with zero rows for the (vanishing) imaginary
/// half of the expanded features. The graph readout aggregates moduli of
/// complex entries, which no real model of this form reproduces, so it is
/// rejected.
pub fn expand_complex_to_real(model: &HoloNetModel) -> Result<HoloNetModel, NetworkError> {
    let cfg = model.config();
    if !cfg.forward_bank.preserves_reality() || !cfg.backward_bank.preserves_reality() {
        return Err(NetworkError::NonRealBank);
    }
    if matches!(cfg.readout, ReadoutKind::Graph { .. }) {
        return Err(NetworkError::NotExpressible(
            "the graph readout aggregates complex moduli".into(),
        ));
    }
    let layers = model
        .layers()
        .iter()
        .map(|p| LayerParams {
            w_fwd: p.w_fwd.iter().map(block).collect(),
            w_bwd: p.w_bwd.iter().map(block).collect(),
            bias: CMat::from_real(p.bias.stack_columns()),
        })
        .collect();
    let readout = model.readout().map(|(w, b)| {
        let (r, c) = w.shape();
        let mut padded = DMatrix::zeros(2 * r, c);
        padded.view_mut((0, 0), (r, c)).copy_from(w.re());
        (CMat::from_real(padded), b.clone())
    });
    let config = ModelConfig {
        field: ScalarField::Real,
        input_dim: 2 * cfg.input_dim,
        widths: cfg.widths.iter().map(|w| 2 * w).collect(),
        ..cfg.clone()
    };
    HoloNetModel::from_parts(config, layers, readout)
}
