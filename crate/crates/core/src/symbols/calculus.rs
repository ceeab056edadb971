use std::sync::Arc;

use num_complex::Complex64;

use super::nodes::{
    AdjointSource, BracketSource, LeftTerm, ProductSource, PullbackSource, ReductionTerm,
    ScaleSource, Source, SumSource, TaylorSource,
};
use super::{Form, ReducedSymbol, SymbolError, TwoPointSymbol};

fn ensure_terms(terms: usize) -> Result<(), SymbolError> {
    if terms == 0 {
        Err(SymbolError::NoTerms)
    } else {
        Ok(())
    }
}

fn ensure_derivatives(src: &dyn TaylorSource, required: usize) -> Result<(), SymbolError> {
    match src.max_order() {
        Some(available) if available < required => {
            Err(SymbolError::MissingDerivative { required, available })
        }
        _ => Ok(()),
    }
}

fn components(s: &ReducedSymbol) -> Vec<ReducedSymbol> {
    s.grading().map(<[_]>::to_vec).unwrap_or_else(|| vec![s.clone()])
}

fn sum_sources(parts: Vec<Source>) -> Source {
    if parts.len() == 1 {
        parts.into_iter().next().unwrap()
    } else {
        Arc::new(SumSource { terms: parts })
    }
}

/// Collects `(grade, source)` pairs into graded components `0..terms`.
fn assemble(
    pieces: Vec<(usize, Source)>,
    terms: usize,
    dim: usize,
    mat: usize,
    form: Form,
    order_m: f64,
    x_independent: bool,
) -> ReducedSymbol {
    let mut buckets: Vec<Vec<Source>> = vec![Vec::new(); terms];
    for (grade, src) in pieces {
        if grade < terms {
            buckets[grade].push(src);
        }
    }
    let comps: Vec<ReducedSymbol> = buckets
        .into_iter()
        .enumerate()
        .map(|(j, parts)| {
            let src = if parts.is_empty() {
                Arc::new(super::nodes::ConstSource {
                    n: mat,
                    values: vec![Complex64::new(0.0, 0.0); mat * mat],
                }) as Source
            } else {
                sum_sources(parts)
            };
            let mut c = ReducedSymbol::from_source(src, dim, mat, form, order_m - j as f64);
            c.x_independent = x_independent;
            c
        })
        .collect();
    ReducedSymbol::graded(comps)
}

/// `(q, p)` reduced symbol of a two-point symbol, keeping `terms` terms.
///
/// Graded inputs `d = Σ dᵢ` give components `Σ_{i+ℓ=j} d_{i,ℓ}`.
pub fn reduce_symbol(d: &TwoPointSymbol, form: Form, terms: usize) -> Result<ReducedSymbol, SymbolError> {
    let form = Form::new(form.q, form.p)?;
    ensure_terms(terms)?;
    ensure_derivatives(d.src.as_ref(), 2 * (terms - 1))?;
    let parts: Vec<TwoPointSymbol> = d
        .grading()
        .map(<[_]>::to_vec)
        .unwrap_or_else(|| vec![d.clone()]);
    let mut pieces = Vec::new();
    for (i, part) in parts.iter().enumerate() {
        for ell in 0..terms.saturating_sub(i) {
            let src: Source = Arc::new(ReductionTerm {
                src: part.src.clone(),
                dim: d.dim(),
                form,
                ell,
            });
            pieces.push((i + ell, src));
        }
    }
    Ok(assemble(pieces, terms, d.dim(), d.mat(), form, d.order_m(), false))
}

/// Re-expresses `a` in another `(q, p)` form.
pub fn convert_form(a: &ReducedSymbol, target: Form, terms: usize) -> Result<ReducedSymbol, SymbolError> {
    let target = Form::new(target.q, target.p)?;
    ensure_terms(terms)?;
    if a.form() == target {
        return Ok(a.clone());
    }
    let parts: Vec<TwoPointSymbol> = components(a)
        .into_iter()
        .map(|c| TwoPointSymbol {
            src: Arc::new(PullbackSource {
                src: c.src.clone(),
                dim: a.dim(),
                form: a.form(),
            }),
            dim: a.dim(),
            mat: a.mat(),
            order_m: c.order_m(),
            scale_l: 1.0,
            grading: None,
        })
        .collect();
    let two_point = if parts.len() == 1 {
        parts.into_iter().next().unwrap()
    } else {
        TwoPointSymbol::graded(parts)
    };
    let mut out = reduce_symbol(&two_point, target, terms)?;
    if a.is_x_independent() {
        out = out.mark_x_independent();
    }
    Ok(out)
}

fn check_pair(a: &ReducedSymbol, b: &ReducedSymbol, form: Form) -> Result<(), SymbolError> {
    for s in [a, b] {
        if s.form() != form {
            return Err(SymbolError::FormMismatch {
                expected: form,
                found: s.form(),
            });
        }
    }
    if a.dim() != b.dim() || a.mat() != b.mat() {
        return Err(SymbolError::Shape(
            format!("N={}, n={}", a.dim(), a.mat()),
            format!("N={}, n={}", b.dim(), b.mat()),
        ));
    }
    Ok(())
}

/// Left symbol of `Â B̂`, truncated after `terms` terms.
pub fn compose_left(a: &ReducedSymbol, b: &ReducedSymbol, terms: usize) -> Result<ReducedSymbol, SymbolError> {
    check_pair(a, b, Form::LEFT)?;
    ensure_terms(terms)?;
    let (ca, cb) = (components(a), components(b));
    let mut pieces = Vec::new();
    for (i1, x) in ca.iter().enumerate() {
        for (i2, y) in cb.iter().enumerate() {
            for ell in 0..terms {
                if i1 + i2 + ell >= terms {
                    break;
                }
                let src: Source = Arc::new(LeftTerm {
                    a: x.src.clone(),
                    b: y.src.clone(),
                    dim: a.dim(),
                    ell,
                });
                ensure_derivatives(src.as_ref(), 0)?;
                pieces.push((i1 + i2 + ell, src));
            }
        }
    }
    let xi = a.is_x_independent() && b.is_x_independent();
    Ok(assemble(pieces, terms, a.dim(), a.mat(), Form::LEFT, a.order_m() + b.order_m(), xi))
}

/// Weyl symbol of `Â B̂`: `ab + (i/2){a, b}` for `terms = 2`.
pub fn compose_weyl(a: &ReducedSymbol, b: &ReducedSymbol, terms: usize) -> Result<ReducedSymbol, SymbolError> {
    check_pair(a, b, Form::WEYL)?;
    ensure_terms(terms)?;
    if terms > 2 {
        return Err(SymbolError::Truncation(terms));
    }
    let (ca, cb) = (components(a), components(b));
    let mut pieces = Vec::new();
    for (i1, x) in ca.iter().enumerate() {
        for (i2, y) in cb.iter().enumerate() {
            let base = i1 + i2;
            if base >= terms {
                continue;
            }
            pieces.push((
                base,
                Arc::new(ProductSource {
                    a: x.src.clone(),
                    b: y.src.clone(),
                }) as Source,
            ));
            if base + 1 < terms {
                let bracket: Source = Arc::new(BracketSource {
                    a: x.src.clone(),
                    b: y.src.clone(),
                    dim: a.dim(),
                });
                ensure_derivatives(bracket.as_ref(), 0)?;
                pieces.push((
                    base + 1,
                    Arc::new(ScaleSource {
                        a: bracket,
                        s: Complex64::new(0.0, 0.5),
                    }) as Source,
                ));
            }
        }
    }
    let xi = a.is_x_independent() && b.is_x_independent();
    Ok(assemble(pieces, terms, a.dim(), a.mat(), Form::WEYL, a.order_m() + b.order_m(), xi))
}

/// `{a, b} = ∂_x a·∂_k b − ∂_x b·∂_k a` for scalar symbols.
pub fn poisson_bracket(a: &ReducedSymbol, b: &ReducedSymbol) -> Result<ReducedSymbol, SymbolError> {
    if a.mat() != 1 || b.mat() != 1 {
        return Err(SymbolError::NotScalar);
    }
    if a.dim() != b.dim() {
        return Err(SymbolError::Shape(format!("N={}", a.dim()), format!("N={}", b.dim())));
    }
    let src: Source = Arc::new(BracketSource {
        a: a.src.clone(),
        b: b.src.clone(),
        dim: a.dim(),
    });
    ensure_derivatives(src.as_ref(), 0)?;
    Ok(ReducedSymbol::from_source(src, a.dim(), 1, a.form(), a.order_m() + b.order_m() - 1.0))
}

fn split_one(d: &ReducedSymbol) -> (ReducedSymbol, ReducedSymbol) {
    let adj: Source = Arc::new(AdjointSource { a: d.src.clone() });
    let herm: Source = Arc::new(ScaleSource {
        a: Arc::new(SumSource {
            terms: vec![d.src.clone(), adj.clone()],
        }),
        s: Complex64::new(0.5, 0.0),
    });
    let anti: Source = Arc::new(SumSource {
        terms: vec![
            Arc::new(ScaleSource {
                a: d.src.clone(),
                s: Complex64::new(0.0, -0.5),
            }) as Source,
            Arc::new(ScaleSource {
                a: adj,
                s: Complex64::new(0.0, 0.5),
            }) as Source,
        ],
    });
    let mut h = ReducedSymbol::from_source(herm, d.dim(), d.mat(), d.form(), d.order_m());
    let mut a = ReducedSymbol::from_source(anti, d.dim(), d.mat(), d.form(), d.order_m());
    h.x_independent = d.is_x_independent();
    a.x_independent = d.is_x_independent();
    (h, a)
}

/// `d = d_H + i d_A` with `d_H`, `d_A` pointwise Hermitian. Gradings are
/// split componentwise.
pub fn hermitian_split(d: &ReducedSymbol) -> (ReducedSymbol, ReducedSymbol) {
    match d.grading() {
        None => split_one(d),
        Some(parts) => {
            let (hs, as_): (Vec<_>, Vec<_>) = parts.iter().map(split_one).unzip();
            (ReducedSymbol::graded(hs), ReducedSymbol::graded(as_))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;
    use crate::symbols::SymMat;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    fn k_times_xprime() -> TwoPointSymbol {
        TwoPointSymbol::scalar(1, 1.0, 1.0, |k, _x, xp| &k[0] * &xp[0])
    }

    #[test]
    fn reduction_of_k_xprime() {
        let d = k_times_xprime();
        let left = reduce_symbol(&d, Form::LEFT, 2).unwrap();
        let weyl = reduce_symbol(&d, Form::WEYL, 2).unwrap();
        let (k, x) = (0.7, -1.3);
        assert!(close(left.eval_scalar(&[k], &[x]).unwrap(), c(k * x, -1.0), 1e-14));
        assert!(close(weyl.eval_scalar(&[k], &[x]).unwrap(), c(k * x, -0.5), 1e-14));
        assert_eq!(left.grading().unwrap().len(), 2);
        assert_eq!(left.grading().unwrap()[1].order_m(), 0.0);
    }

    #[test]
    fn constant_in_space_is_form_independent() {
        let d = TwoPointSymbol::scalar(2, 2.0, 1.0, |k, _, _| &k[0] * &k[0] + (&k[1] * 3.0).sin());
        let left = reduce_symbol(&d, Form::LEFT, 3).unwrap();
        let other = reduce_symbol(&d, Form::new(0.3, 0.7).unwrap(), 3).unwrap();
        let kk = [0.4, -0.2];
        let xx = [1.0, 2.0];
        let a = left.eval_scalar(&kk, &xx).unwrap();
        let b = other.eval_scalar(&kk, &xx).unwrap();
        assert!(close(a, b, 1e-15));
        let g = left.grading().unwrap();
        assert_eq!(g[1].eval_scalar(&kk, &xx).unwrap(), c(0.0, 0.0));
        assert_eq!(g[2].eval_scalar(&kk, &xx).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn left_to_weyl_conversion() {
        let a = ReducedSymbol::scalar(1, Form::LEFT, 1.0, |k, x| &k[0] * &x[0] - Complex64::i());
        let w = convert_form(&a, Form::WEYL, 2).unwrap();
        assert_eq!(w.form(), Form::WEYL);
        let v = w.eval_scalar(&[2.0], &[0.5]).unwrap();
        assert!(close(v, c(1.0, -0.5), 1e-14), "{v}");
        let same = convert_form(&a, Form::LEFT, 2).unwrap();
        assert_eq!(same.eval_scalar(&[2.0], &[0.5]).unwrap(), c(1.0, -1.0));
    }

    #[test]
    fn left_composition_k2_x2() {
        let a = ReducedSymbol::scalar(1, Form::LEFT, 2.0, |k, _| &k[0] * &k[0]);
        let b = ReducedSymbol::scalar(1, Form::LEFT, 0.0, |_, x| &x[0] * &x[0]);
        let ab = compose_left(&a, &b, 3).unwrap();
        let (k, x) = (1.1, -0.6);
        let expect = c(k * k * x * x - 2.0, -4.0 * k * x);
        assert!(close(ab.eval_scalar(&[k], &[x]).unwrap(), expect, 1e-14));
    }

    #[test]
    fn weyl_composition_and_limits() {
        let a = ReducedSymbol::scalar(1, Form::WEYL, 1.0, |k, _| k[0].clone());
        let b = ReducedSymbol::scalar(1, Form::WEYL, 0.0, |_, x| x[0].clone());
        let ab = compose_weyl(&a, &b, 2).unwrap();
        assert!(close(ab.eval_scalar(&[0.3], &[2.0]).unwrap(), c(0.6, -0.5), 1e-15));
        assert_eq!(compose_weyl(&a, &b, 3).unwrap_err(), SymbolError::Truncation(3));
        let left = ReducedSymbol::scalar(1, Form::LEFT, 0.0, |_, x| x[0].clone());
        assert!(matches!(
            compose_weyl(&a, &left, 2),
            Err(SymbolError::FormMismatch { .. })
        ));
    }

    #[test]
    fn bracket_sign_convention() {
        let x = ReducedSymbol::scalar(1, Form::LEFT, 0.0, |_, x| x[0].clone());
        let k = ReducedSymbol::scalar(1, Form::LEFT, 1.0, |k, _| k[0].clone());
        let xk = poisson_bracket(&x, &k).unwrap();
        assert_eq!(xk.eval_scalar(&[0.2], &[0.1]).unwrap(), c(1.0, 0.0));
        let k2 = ReducedSymbol::scalar(1, Form::LEFT, 2.0, |k, _| &k[0] * &k[0]);
        let x2 = ReducedSymbol::scalar(1, Form::LEFT, 0.0, |_, x| &x[0] * &x[0]);
        let v = poisson_bracket(&k2, &x2).unwrap().eval_scalar(&[1.5], &[0.4]).unwrap();
        assert!(close(v, c(-4.0 * 1.5 * 0.4, 0.0), 1e-15));
    }

    #[test]
    fn hermitian_split_of_i_identity() {
        let d = ReducedSymbol::analytic(1, 2, Form::WEYL, 0.0, |k, _| {
            let z = Jet::constant(k[0].nvars(), k[0].order(), Complex64::new(0.0, 0.0));
            let i = Jet::constant(k[0].nvars(), k[0].order(), Complex64::i());
            SymMat::from_entries(2, vec![i.clone(), z.clone(), z, i])
        });
        let (h, a) = hermitian_split(&d);
        let hv = h.eval(&[0.0], &[0.0]).unwrap();
        let av = a.eval(&[0.0], &[0.0]).unwrap();
        assert!(hv.iter().all(|v| v.norm() == 0.0));
        assert_eq!(av, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn missing_derivatives_are_reported() {
        let d = TwoPointSymbol::sampled(1, 1, 1.0, 1.0, |k, _x, xp| vec![c(k[0] * xp[0], 0.0)]);
        assert!(reduce_symbol(&d, Form::LEFT, 2).is_ok());
        assert_eq!(
            reduce_symbol(&d, Form::LEFT, 3).unwrap_err(),
            SymbolError::MissingDerivative {
                required: 4,
                available: 2
            }
        );
    }
}
