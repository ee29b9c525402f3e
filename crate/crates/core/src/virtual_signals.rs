//! Virtual references, virtual tracking errors and virtual interconnection
//! signals computed from measured outputs.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lti::{filter, inverse_filter, RationalTF, Signal};
use crate::network::{reference_graph, EdgeSignals, MultiSignal, NetworkSpec};

/// Virtual signals on a common horizon `horizon_used`.
///
/// `p_bar[(i, j)] = P_ij y_i` is sent from node `i` to node `j`;
/// `o_bar[(j, i)] = ō^c_ji` is produced by node `j` for its neighbor `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct VirtualData {
    pub r_bar: MultiSignal,
    pub e_bar: MultiSignal,
    pub p_bar: EdgeSignals,
    pub o_bar: EdgeSignals,
    pub horizon_used: usize,
}

fn sub_signals(a: &Signal, b: &Signal, n: usize) -> Signal {
    Signal::with_start(
        a.samples[..n]
            .iter()
            .zip(&b.samples[..n])
            .map(|(x, y)| x - y)
            .collect(),
        a.start,
    )
}

fn accumulate(acc: &mut Signal, x: &Signal) {
    for (a, b) in acc.samples.iter_mut().zip(&x.samples) {
        *a += b;
    }
}

fn check_outputs(spec: &NetworkSpec, y: &MultiSignal) -> Result<()> {
    if y.len() != spec.nodes() {
        return Err(Error::Dimension(format!(
            "{} output channels for {} nodes",
            y.len(),
            spec.nodes()
        )));
    }
    Ok(())
}

/// Two-pass distributed computation of the virtual signals.
///
/// Pass 1: every node filters its output through `P_ij` and sends
/// `p̄_ij` to neighbor `j`. Pass 2: node `i` inverts `T_i` on
/// `y_i - Σ_j Q_ij p̄_ji`, giving `r̄_i`, then `ē_i = r̄_i - y_i`.
pub fn virtual_references_distributed(spec: &NetworkSpec, y: &MultiSignal) -> Result<VirtualData> {
    check_outputs(spec, y)?;
    let l = spec.nodes();
    let mut p_bar = EdgeSignals::new();
    for (i, j) in spec.graph().directed_edges() {
        p_bar.insert((i, j), filter(spec.p(i, j), y.channel(i))?);
    }

    let mut r_bar = Vec::with_capacity(l);
    for i in 0..l {
        let mut x = y.channel(i).clone();
        for j in spec.neighbors(i) {
            let q = spec.q(i, j);
            if !q.is_zero() {
                let coupled = filter(q, &p_bar[&(j, i)])?;
                for (a, b) in x.samples.iter_mut().zip(&coupled.samples) {
                    *a -= b;
                }
            }
        }
        r_bar.push(inverse_filter(spec.t(i), &x)?);
    }
    let n = r_bar.iter().map(Signal::len).min().unwrap_or(0);
    let r_bar: Vec<Signal> = r_bar.into_iter().map(|s| s.truncated(n)).collect();
    let e_bar: Vec<Signal> = (0..l)
        .map(|i| sub_signals(&r_bar[i], y.channel(i), n))
        .collect();
    let p_bar: EdgeSignals = p_bar
        .into_iter()
        .map(|(k, s)| (k, s.truncated(n)))
        .collect();
    let e_bar = MultiSignal::new(e_bar)?;
    let o_bar = virtual_controller_interconnections(spec, &e_bar, &p_bar)?;
    Ok(VirtualData {
        r_bar: MultiSignal::new(r_bar)?,
        e_bar,
        p_bar,
        o_bar,
        horizon_used: n,
    })
}

/// `ō^c_ji = T_j/(1-T_j) ē_j + Σ_h Q_jh/(1-T_j) p̄_hj` for every directed
/// edge `(j, i)`.
pub fn virtual_controller_interconnections(
    spec: &NetworkSpec,
    e_bar: &MultiSignal,
    p_bar: &EdgeSignals,
) -> Result<EdgeSignals> {
    check_outputs(spec, e_bar)?;
    let l = spec.nodes();
    let mut per_node = Vec::with_capacity(l);
    for j in 0..l {
        let omt = &RationalTF::one() - spec.t(j);
        if omt.is_zero() {
            return Err(Error::UnitReference { node: j });
        }
        let inv = omt.recip()?;
        let mut o = filter(&(spec.t(j) * &inv), e_bar.channel(j))?;
        for h in spec.neighbors(j) {
            let q = spec.q(j, h);
            if q.is_zero() {
                continue;
            }
            let p = p_bar
                .get(&(h, j))
                .ok_or_else(|| Error::Dimension(format!("missing p_bar for edge ({h}, {j})")))?;
            accumulate(&mut o, &filter(&(q * &inv), p)?);
        }
        per_node.push(o);
    }
    Ok(spec
        .graph()
        .directed_edges()
        .into_iter()
        .map(|(j, i)| ((j, i), per_node[j].clone()))
        .collect())
}

/// Markov parameters `H_0..H_{n-1}` of `(I - QΔP)^{-1} T`.
fn reference_markov(spec: &NetworkSpec, n: usize) -> Result<Vec<DMatrix<f64>>> {
    let l = spec.nodes();
    let real = reference_graph(spec).realize()?;
    let ss = &real.ss;
    let rows: Vec<usize> = (0..l).collect();
    let c = ss.c.select_rows(&rows);
    let d = ss.d.select_rows(&rows);
    let mut out = Vec::with_capacity(n);
    if n > 0 {
        out.push(d);
    }
    let mut m = ss.b.clone();
    for _ in 1..n {
        out.push(&c * &m);
        m = &ss.a * &m;
    }
    Ok(out)
}

/// Virtual references by one dense solve of `y = (I - QΔP)^{-1} T r̄` over
/// the whole network.
///
/// The unknowns are `r̄_j(0..N-d_j)` with `d_j` the relative degree of
/// `T_j`; equation `(i, t)` is `y_i(t)` for `t ≥ d_i`. Samples
/// `y_i(t)`, `t < d_i`, are not used and the solve is exact when they are
/// zero (as for strictly proper plants).
pub fn virtual_references_centralized(spec: &NetworkSpec, y: &MultiSignal) -> Result<MultiSignal> {
    check_outputs(spec, y)?;
    let l = spec.nodes();
    let n = y.horizon();
    let mut d = Vec::with_capacity(l);
    for i in 0..l {
        let t = spec.t(i);
        if t.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let rd = t.relative_degree();
        if rd < 0 {
            return Err(Error::Improper(rd));
        }
        let rd = rd as usize;
        if n <= rd {
            return Err(Error::HorizonTooShort { needed: rd, got: n });
        }
        d.push(rd);
    }
    let h = reference_markov(spec, n)?;

    let mut offset = vec![0; l + 1];
    for j in 0..l {
        offset[j + 1] = offset[j] + (n - d[j]);
    }
    let size = offset[l];
    let mut a = DMatrix::<f64>::zeros(size, size);
    let mut b = DVector::<f64>::zeros(size);
    for i in 0..l {
        for t in d[i]..n {
            let row = offset[i] + t - d[i];
            b[row] = y.channel(i).samples[t];
            for j in 0..l {
                for s in 0..=t.min(n - d[j] - 1) {
                    a[(row, offset[j] + s)] = h[t - s][(i, j)];
                }
            }
        }
    }
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular("reference operator".into()))?;
    let horizon = n - d.iter().copied().max().unwrap_or(0);
    let start = y.channel(0).start;
    MultiSignal::new(
        (0..l)
            .map(|j| {
                Signal::with_start(
                    sol.rows(offset[j], horizon).iter().copied().collect(),
                    start,
                )
            })
            .collect(),
    )
}

/// Writes the virtual signals as CSV, one column per signal.
pub fn write_virtual_csv<W: Write>(spec: &NetworkSpec, vd: &VirtualData, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    let mut columns: Vec<&Signal> = Vec::new();
    for i in 0..spec.nodes() {
        header.push(format!("r_bar_{}", spec.id(i)));
        columns.push(vd.r_bar.channel(i));
    }
    for i in 0..spec.nodes() {
        header.push(format!("e_bar_{}", spec.id(i)));
        columns.push(vd.e_bar.channel(i));
    }
    for (&(i, j), s) in &vd.p_bar {
        header.push(format!("p_bar_{}_{}", spec.id(i), spec.id(j)));
        columns.push(s);
    }
    for (&(j, i), s) in &vd.o_bar {
        header.push(format!("o_bar_c_{}_{}", spec.id(j), spec.id(i)));
        columns.push(s);
    }
    wtr.write_record(&header)?;
    let start = vd.r_bar.channels().first().map_or(0, |c| c.start);
    for t in 0..vd.horizon_used {
        let mut rec = vec![(start + t as i64).to_string()];
        rec.extend(columns.iter().map(|c| c.samples[t].to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::presets::{nine_node, two_node, two_node_coupled, TwoNodeParams};
    use crate::network::{simulate_plant, simulate_reference, white_noise};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_outputs_give_zero_signals() {
        let spec = nine_node().unwrap();
        let vd = virtual_references_distributed(&spec, &MultiSignal::zeros(9, 20)).unwrap();
        assert_eq!(vd.horizon_used, 19);
        assert_eq!(vd.r_bar.max_abs(), 0.0);
        assert_eq!(vd.e_bar.max_abs(), 0.0);
        assert!(vd
            .p_bar
            .values()
            .chain(vd.o_bar.values())
            .all(|s| s.max_abs() == 0.0));
    }

    #[test]
    fn decoupled_round_trip() {
        let spec = nine_node().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = white_noise(&mut rng, 9, 80, 1.0);
        let y = simulate_plant(&spec, &u, None).unwrap();
        let vd = virtual_references_distributed(&spec, &y).unwrap();
        let back = simulate_reference(&spec, &vd.r_bar).unwrap();
        for i in 0..9 {
            for t in 0..vd.horizon_used {
                assert!((back.channel(i).samples[t] - y.channel(i).samples[t]).abs() < 1e-9);
                let e = vd.r_bar.channel(i).samples[t] - y.channel(i).samples[t];
                assert_eq!(vd.e_bar.channel(i).samples[t], e);
            }
        }
    }

    #[test]
    fn decoupled_interconnection_is_integrated_error() {
        let p = TwoNodeParams {
            gamma: [0.6, 0.8],
            ..TwoNodeParams::default()
        };
        let spec = two_node(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let e = white_noise(&mut rng, 2, 30, 1.0);
        let o = virtual_controller_interconnections(&spec, &e, &EdgeSignals::new()).unwrap();
        for j in 0..2 {
            let k = RationalTF::first_order(1.0 - p.gamma[j], 1.0);
            let expect = filter(&k, e.channel(j)).unwrap();
            let got = &o[&(j, 1 - j)];
            for (a, b) in got.samples.iter().zip(&expect.samples) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coupled_distributed_matches_centralized() {
        let spec = two_node_coupled(&TwoNodeParams::default(), 0.2, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = white_noise(&mut rng, 2, 60, 1.0);
        let y = simulate_plant(&spec, &u, None).unwrap();
        let vd = virtual_references_distributed(&spec, &y).unwrap();
        let rc = virtual_references_centralized(&spec, &y).unwrap();
        for i in 0..2 {
            for (a, b) in vd
                .r_bar
                .channel(i)
                .samples
                .iter()
                .zip(&rc.channel(i).samples)
            {
                assert!((a - b).abs() < 1e-9);
            }
        }
        let back = simulate_reference(&spec, &vd.r_bar).unwrap();
        for i in 0..2 {
            for t in 0..vd.horizon_used {
                assert!((back.channel(i).samples[t] - y.channel(i).samples[t]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn csv_header_names() {
        let spec = two_node_coupled(&TwoNodeParams::default(), 0.2, 0.5).unwrap();
        let vd = virtual_references_distributed(&spec, &MultiSignal::zeros(2, 5)).unwrap();
        let mut buf = Vec::new();
        write_virtual_csv(&spec, &vd, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "t,r_bar_1,r_bar_2,e_bar_1,e_bar_2,p_bar_1_2,p_bar_2_1,o_bar_c_1_2,o_bar_c_2_1"
        );
        assert_eq!(text.lines().count(), 5);
    }
}
