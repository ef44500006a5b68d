//! Independent scalar reference implementations used by the integration
//! tests. They work on nested `Vec`s and explicit edge lists and share no
//! code with the library beyond reading parameter values.
#![allow(dead_code)]

use std::collections::BTreeSet;

use gnnseg::imagecore::LabelMask;
use gnnseg::neural::{Activation, DenseLayer, GatLayer, GcnLayer, GraphLayer, HeadCombine, ParamId, ParamStore};
use gnnseg::pipeline::{GnnSegModel, PreparedSlice};

pub type Rows = Vec<Vec<f64>>;

pub fn act(a: Activation, x: f64) -> f64 {
    match a {
        Activation::Identity => x,
        Activation::Elu => {
            if x > 0.0 {
                x
            } else {
                x.exp() - 1.0
            }
        }
        Activation::LeakyRelu => {
            if x > 0.0 {
                x
            } else {
                0.2 * x
            }
        }
        Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        Activation::Relu => {
            if x > 0.0 {
                x
            } else {
                0.0
            }
        }
    }
}

fn param(store: &ParamStore, id: ParamId) -> Rows {
    let m = store.get(id);
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect()).collect()
}

/// `act(x·W + b)` row by row.
pub fn dense(store: &ParamStore, layer: &DenseLayer, x: &Rows) -> Rows {
    let w = param(store, layer.weight);
    let b = param(store, layer.bias);
    x.iter()
        .map(|row| {
            (0..layer.output)
                .map(|j| {
                    let mut s = b[0][j];
                    for (i, &v) in row.iter().enumerate() {
                        s += v * w[i][j];
                    }
                    act(layer.activation, s)
                })
                .collect()
        })
        .collect()
}

pub fn add(a: &Rows, b: &Rows) -> Rows {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

pub fn hcat(a: &Rows, b: &Rows) -> Rows {
    a.iter().zip(b).map(|(r, s)| r.iter().chain(s).copied().collect()).collect()
}

/// Closed neighbourhood of `i` (itself plus every node sharing an edge).
pub fn closed_neighbourhood(n: usize, edges: &[(usize, usize)], i: usize) -> Vec<usize> {
    let mut set = BTreeSet::new();
    set.insert(i);
    for &(a, b) in edges {
        if a == i && b < n {
            set.insert(b);
        }
        if b == i && a < n {
            set.insert(a);
        }
    }
    set.into_iter().collect()
}

/// One attention head written straight from its definition:
/// `r = hW`, `e_ij = LeakyReLU(a·[r_i ‖ r_j])`, `θ = softmax_j(e)`,
/// `h'_i = ELU(Σ_j θ_ij r_j)`. Also returns `θ` per node.
pub fn gat_head(h: &Rows, edges: &[(usize, usize)], w: &Rows, a: &[f64]) -> (Rows, Rows) {
    let n = h.len();
    let q = w[0].len();
    let r: Rows = h
        .iter()
        .map(|row| (0..q).map(|k| row.iter().enumerate().map(|(i, &v)| v * w[i][k]).sum()).collect())
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut thetas = Vec::with_capacity(n);
    for i in 0..n {
        let nb = closed_neighbourhood(n, edges, i);
        let e: Vec<f64> = nb
            .iter()
            .map(|&j| {
                let mut s = 0.0;
                for k in 0..q {
                    s += a[k] * r[i][k] + a[q + k] * r[j][k];
                }
                act(Activation::LeakyRelu, s)
            })
            .collect();
        let z: f64 = e.iter().map(|v| v.exp()).sum();
        let theta: Vec<f64> = e.iter().map(|v| v.exp() / z).collect();
        let row: Vec<f64> = (0..q)
            .map(|k| {
                let s: f64 = nb.iter().zip(&theta).map(|(&j, t)| t * r[j][k]).sum();
                act(Activation::Elu, s)
            })
            .collect();
        out.push(row);
        thetas.push(theta);
    }
    (out, thetas)
}

pub fn gat_layer(store: &ParamStore, layer: &GatLayer, h: &Rows, edges: &[(usize, usize)]) -> Rows {
    let heads: Vec<Rows> = layer
        .heads
        .iter()
        .map(|hd| {
            let w = param(store, hd.weight);
            let a: Vec<f64> = param(store, hd.attention).into_iter().flatten().collect();
            gat_head(h, edges, &w, &a).0
        })
        .collect();
    let n = h.len();
    match layer.combine {
        HeadCombine::Concat => (0..n).map(|i| heads.iter().flat_map(|o| o[i].clone()).collect()).collect(),
        HeadCombine::Average => (0..n)
            .map(|i| {
                (0..layer.head_width)
                    .map(|k| heads.iter().map(|o| o[i][k]).sum::<f64>() / heads.len() as f64)
                    .collect()
            })
            .collect(),
    }
}

/// `act(Σ_j h_j W / sqrt(d_i d_j))` over closed neighbourhoods, degrees
/// counting the self loop.
pub fn gcn_layer(store: &ParamStore, layer: &GcnLayer, h: &Rows, edges: &[(usize, usize)]) -> Rows {
    let n = h.len();
    let w = param(store, layer.weight);
    let nbs: Vec<Vec<usize>> = (0..n).map(|i| closed_neighbourhood(n, edges, i)).collect();
    (0..n)
        .map(|i| {
            (0..layer.output)
                .map(|k| {
                    let mut s = 0.0;
                    for &j in &nbs[i] {
                        let hw: f64 = h[j].iter().enumerate().map(|(c, &v)| v * w[c][k]).sum();
                        s += hw / ((nbs[i].len() * nbs[j].len()) as f64).sqrt();
                    }
                    act(layer.activation, s)
                })
                .collect()
        })
        .collect()
}

/// The structural model evaluated with the scalar layers above.
pub fn structural_forward(model: &GnnSegModel, prep: &PreparedSlice) -> Vec<f64> {
    let s = &model.store;
    let g = &prep.graph;
    let fg: Rows = g.f_g.clone();
    let fp: Rows = g.f_p.iter().map(|p| p.to_vec()).collect();
    let fcn = |layers: &[DenseLayer], x: Rows| layers.iter().fold(x, |x, l| dense(s, l, &x));

    let a = fcn(&model.fcn_gray.layers, fg.clone());
    let a = add(&a, &dense(s, &model.si_gray.fcn, &a));
    let b = fcn(&model.fcn_position.layers, fp.clone());
    let b = add(&b, &dense(s, &model.si_position.fcn, &b));

    let mut c = hcat(&fg, &fp);
    for layer in &model.gnn {
        c = match layer {
            GraphLayer::Gat(l) => gat_layer(s, l, &c, &g.edges),
            GraphLayer::Gcn(l) => gcn_layer(s, l, &c, &g.edges),
        };
    }
    let c = add(&c, &dense(s, &model.si_gnn.fcn, &c));

    let ab = hcat(&a, &b);
    let o1 = add(&dense(s, &model.mutual.fcn1, &c), &ab);
    let o2 = add(&dense(s, &model.mutual.fcn2, &ab), &c);
    let tau = hcat(&o1, &o2);
    fcn(&model.final_fcn.layers, tau).into_iter().map(|r| r[0]).collect()
}

/// Every connected simple graph on `n` labeled nodes, as sorted edge lists.
pub fn connected_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for bits in 0u32..(1u32 << pairs.len()) {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| bits >> k & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        // Union-find connectivity.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for &(a, b) in &edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        if (0..n).all(|x| find(&mut parent, x) == root) {
            out.push(edges);
        }
    }
    out
}

/// Reference metric values for one class, computed from coordinate sets.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMetrics {
    pub dice: Option<f64>,
    pub tp: Option<f64>,
    pub apd: Option<f64>,
}

fn class_set(mask: &LabelMask, class: u8) -> BTreeSet<(usize, usize)> {
    let mut set = BTreeSet::new();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) == class {
                set.insert((y, x));
            }
        }
    }
    set
}

/// Boundary as `(y, x)` so that set order is row-major.
fn boundary(set: &BTreeSet<(usize, usize)>, w: usize, h: usize) -> Vec<(usize, usize)> {
    set.iter()
        .copied()
        .filter(|&(y, x)| {
            let outside = |dx: i64, dy: i64| {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 || !set.contains(&(ny as usize, nx as usize))
            };
            outside(-1, 0) || outside(1, 0) || outside(0, -1) || outside(0, 1)
        })
        .collect()
}

pub fn oracle_metrics(pred: &LabelMask, truth: &LabelMask, class: u8) -> OracleMetrics {
    let (w, h) = (truth.width(), truth.height());
    let p = class_set(pred, class);
    let t = class_set(truth, class);
    let inter = p.intersection(&t).count() as f64;
    let dice = (p.len() + t.len() > 0).then(|| inter / ((t.len() + p.len()) as f64 / 2.0));
    let tp = (!t.is_empty()).then(|| inter / t.len() as f64);
    let apd = (!p.is_empty() && !t.is_empty()).then(|| {
        let pb = boundary(&p, w, h);
        let tb = boundary(&t, w, h);
        let mut sum = 0.0;
        for &(py, px) in &pb {
            let best = tb
                .iter()
                .map(|&(ty, tx)| {
                    let dx = px as i64 - tx as i64;
                    let dy = py as i64 - ty as i64;
                    (dx * dx + dy * dy) as u64
                })
                .min()
                .unwrap();
            sum += (best as f64).sqrt();
        }
        sum / pb.len() as f64
    });
    OracleMetrics { dice, tp, apd }
}
