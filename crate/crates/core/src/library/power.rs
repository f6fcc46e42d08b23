use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::LibraryError;
use crate::model::{GraphId, LinkRef, Model, NodeId, QuadExpr, Sense, VarRef};
use crate::scalar::Scalar;

/// Angle-difference regularization used when none is given.
pub const DEFAULT_BETA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Generator<T> {
    pub c1: T,
    pub c2: T,
    pub pmin: T,
    pub pmax: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus<T> {
    pub load: T,
    pub generators: Vec<Generator<T>>,
    pub angle_min: T,
    pub angle_max: T,
    /// Fixed voltage angle of a reference bus.
    pub reference: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line<T> {
    pub src: usize,
    pub dst: usize,
    pub admittance: T,
    pub angle_limit: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetwork<T> {
    pub buses: Vec<Bus<T>>,
    pub lines: Vec<Line<T>>,
    pub beta: T,
}

impl<T: Scalar> PowerNetwork<T> {
    pub fn validate(&self) -> Result<(), LibraryError> {
        let nb = self.buses.len();
        let bad = |msg: String| Err(LibraryError::Network(msg));
        if !(self.beta >= T::zero()) {
            return bad("beta must be nonnegative".into());
        }
        for (i, b) in self.buses.iter().enumerate() {
            if !(b.angle_min <= b.angle_max) {
                return bad(format!("bus {i} has reversed angle bounds"));
            }
            if let Some(r) = b.reference {
                if !r.is_finite() {
                    return bad(format!("bus {i} has a non-finite reference angle"));
                }
            }
            for (j, gen) in b.generators.iter().enumerate() {
                if gen.c2 < T::zero() || !(gen.pmin <= gen.pmax) {
                    return bad(format!("generator {j} on bus {i} needs c2 ≥ 0 and pmin ≤ pmax"));
                }
            }
        }
        for (l, line) in self.lines.iter().enumerate() {
            if line.src >= nb || line.dst >= nb || line.src == line.dst {
                return bad(format!("line {l} has invalid endpoints ({}, {})", line.src, line.dst));
            }
            if !(line.admittance > T::zero()) || !(line.angle_limit >= T::zero()) {
                return bad(format!("line {l} needs a positive admittance and nonnegative angle limit"));
            }
        }
        let mut comp: Vec<usize> = (0..nb).collect();
        fn find(c: &mut [usize], mut v: usize) -> usize {
            while c[v] != v {
                c[v] = c[c[v]];
                v = c[v];
            }
            v
        }
        for line in &self.lines {
            let (a, b) = (find(&mut comp, line.src), find(&mut comp, line.dst));
            comp[a.max(b)] = a.min(b);
        }
        let mut has_ref = vec![false; nb];
        for (i, b) in self.buses.iter().enumerate() {
            if b.reference.is_some() {
                let r = find(&mut comp, i);
                has_ref[r] = true;
            }
        }
        for i in 0..nb {
            let r = find(&mut comp, i);
            if !has_ref[r] {
                return bad(format!("the component containing bus {i} has no reference bus"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DcopfModel<T> {
    pub model: Model<T>,
    pub graph: GraphId,
    pub buses: Vec<NodeId>,
    pub lines: Vec<NodeId>,
    /// Links tying bus `power_in`/`power_out` to line flows.
    pub power_links: Vec<LinkRef>,
    /// Links tying line end angles to bus angles.
    pub angle_links: Vec<LinkRef>,
}

impl<T: Scalar> DcopfModel<T> {
    pub fn bus_angle(&self, i: usize) -> VarRef {
        VarRef { node: self.buses[i], index: 0 }
    }

    pub fn generation(&self, i: usize, j: usize) -> VarRef {
        VarRef { node: self.buses[i], index: 1 + j }
    }

    pub fn flow(&self, l: usize) -> VarRef {
        VarRef { node: self.lines[l], index: 2 }
    }
}

/// One node per bus (`va`, `P{j}`, `power_in{k}`, `power_out{k}`) and one per
/// line (`va_i`, `va_j`, `flow`), coupled by power and angle links.
pub fn build_dcopf_model<T: Scalar>(net: &PowerNetwork<T>) -> Result<DcopfModel<T>, LibraryError> {
    net.validate()?;
    let mut model = Model::new();
    let graph = model.new_graph("dcopf");
    let one = T::one();

    let mut lines_in: Vec<Vec<usize>> = vec![Vec::new(); net.buses.len()];
    let mut lines_out: Vec<Vec<usize>> = vec![Vec::new(); net.buses.len()];
    for (l, line) in net.lines.iter().enumerate() {
        lines_out[line.src].push(l);
        lines_in[line.dst].push(l);
    }

    let mut buses = Vec::with_capacity(net.buses.len());
    let mut power_in_vars = Vec::new();
    let mut power_out_vars = Vec::new();
    for (i, bus) in net.buses.iter().enumerate() {
        let n = model.add_named_node(graph, format!("bus{}", i + 1))?;
        match bus.reference {
            Some(r) => model.add_variable(n, "va", r, r, Some(r))?,
            None => model.add_variable(n, "va", bus.angle_min, bus.angle_max, None)?,
        };
        let mut obj = QuadExpr::new();
        let mut balance = Vec::new();
        for (j, gen) in bus.generators.iter().enumerate() {
            let p = model.add_variable(n, format!("P{}", j + 1), gen.pmin, gen.pmax, None)?;
            obj.add_linear(p, gen.c1).add_quadratic(p, p, gen.c2);
            balance.push((p, one));
        }
        let mut ins = Vec::new();
        for k in 0..lines_in[i].len() {
            let v = model.add_free_variable(n, format!("power_in{}", k + 1))?;
            balance.push((v, one));
            ins.push(v);
        }
        let mut outs = Vec::new();
        for k in 0..lines_out[i].len() {
            let v = model.add_free_variable(n, format!("power_out{}", k + 1))?;
            balance.push((v, -one));
            outs.push(v);
        }
        if !balance.is_empty() {
            model.add_constraint(n, &balance, Sense::Eq, bus.load)?;
        } else if bus.load != T::zero() {
            return Err(LibraryError::Network(format!("isolated bus {i} without generation cannot serve its load")));
        }
        model.set_objective(n, obj)?;
        buses.push(n);
        power_in_vars.push(ins);
        power_out_vars.push(outs);
    }

    let mut lines = Vec::with_capacity(net.lines.len());
    for (l, line) in net.lines.iter().enumerate() {
        let n = model.add_named_node(graph, format!("line{}", l + 1))?;
        let vi = model.add_free_variable(n, "va_i")?;
        let vj = model.add_free_variable(n, "va_j")?;
        let flow = model.add_free_variable(n, "flow")?;
        model.add_constraint(n, &[(flow, one), (vi, -line.admittance), (vj, line.admittance)], Sense::Eq, T::zero())?;
        model.add_constraint(n, &[(vi, one), (vj, -one)], Sense::Ge, -line.angle_limit)?;
        model.add_constraint(n, &[(vi, one), (vj, -one)], Sense::Le, line.angle_limit)?;
        let mut obj = QuadExpr::new();
        if net.beta != T::zero() {
            obj.add_square(&[(vi, one), (vj, -one)], net.beta / T::lit(2.0));
        }
        model.set_objective(n, obj)?;
        lines.push(n);
    }

    let mut power_links = Vec::new();
    for i in 0..net.buses.len() {
        for (k, &l) in lines_in[i].iter().enumerate() {
            let flow = VarRef { node: lines[l], index: 2 };
            power_links.push(model.add_link_constraint(graph, &[(power_in_vars[i][k], one), (flow, -one)], Sense::Eq, T::zero())?);
        }
        for (k, &l) in lines_out[i].iter().enumerate() {
            let flow = VarRef { node: lines[l], index: 2 };
            power_links.push(model.add_link_constraint(graph, &[(power_out_vars[i][k], one), (flow, -one)], Sense::Eq, T::zero())?);
        }
    }
    let mut angle_links = Vec::new();
    for (end, index) in [(0usize, 0usize), (1, 1)] {
        for (l, line) in net.lines.iter().enumerate() {
            let bus = if end == 0 { line.src } else { line.dst };
            let terms = [(VarRef { node: lines[l], index }, one), (VarRef { node: buses[bus], index: 0 }, -one)];
            angle_links.push(model.add_link_constraint(graph, &terms, Sense::Eq, T::zero())?);
        }
    }
    Ok(DcopfModel { model, graph, buses, lines, power_links, angle_links })
}

/// Lattice network of `rows × cols` buses with nearest-neighbour lines.
///
/// Loads are uniform in [0.5, 1.5]. Generators sit on bus (0, 0), which is
/// the reference, and on each other bus with probability 1/4; every bus
/// without a generator among itself and its neighbours receives one, so
/// supply is never more than one line away. Quadratic costs are uniform in
/// [0.1, 1], linear costs in [1, 3], capacities are `[0, rows·cols·1.5]`,
/// admittances are uniform in [1, 5], angle limits are 0.5 and bus angles
/// lie in [-π, π].
pub fn generate_grid_network<T: Scalar>(rows: usize, cols: usize, seed: u64) -> PowerNetwork<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rows * cols;
    let pi = T::lit(std::f64::consts::PI);
    let mut lines = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                lines.push((i, i + 1));
            }
            if r + 1 < rows {
                lines.push((i, i + cols));
            }
        }
    }
    let loads: Vec<f64> = (0..nb).map(|_| rng.gen_range(0.5..=1.5)).collect();
    let mut has_gen: Vec<bool> = (0..nb).map(|i| i == 0 || rng.gen_bool(0.25)).collect();
    let mut neighbours = vec![Vec::new(); nb];
    for &(a, b) in &lines {
        neighbours[a].push(b);
        neighbours[b].push(a);
    }
    for i in 0..nb {
        if !has_gen[i] && !neighbours[i].iter().any(|&j| has_gen[j]) {
            has_gen[i] = true;
        }
    }
    let capacity = T::lit(nb as f64 * 1.5);
    let buses = (0..nb)
        .map(|i| {
            let generators = if has_gen[i] {
                vec![Generator {
                    c1: T::lit(rng.gen_range(1.0..=3.0)),
                    c2: T::lit(rng.gen_range(0.1..=1.0)),
                    pmin: T::zero(),
                    pmax: capacity,
                }]
            } else {
                Vec::new()
            };
            Bus {
                load: T::lit(loads[i]),
                generators,
                angle_min: -pi,
                angle_max: pi,
                reference: (i == 0).then(T::zero),
            }
        })
        .collect();
    let lines = lines
        .into_iter()
        .map(|(src, dst)| Line { src, dst, admittance: T::lit(rng.gen_range(1.0..=5.0)), angle_limit: T::lit(0.5) })
        .collect();
    PowerNetwork { buses, lines, beta: T::lit(DEFAULT_BETA) }
}

#[derive(Debug, Deserialize)]
struct BusRow {
    bus: usize,
    load: f64,
    angle_min: f64,
    angle_max: f64,
    reference: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct GeneratorRow {
    bus: usize,
    c1: f64,
    c2: f64,
    pmin: f64,
    pmax: f64,
}

#[derive(Debug, Deserialize)]
struct LineRow {
    src: usize,
    dst: usize,
    admittance: f64,
    angle_limit: f64,
}

fn rows<R: Read, D: for<'de> Deserialize<'de>>(reader: R, table: &str) -> Result<Vec<D>, LibraryError> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader)
        .deserialize()
        .collect::<Result<Vec<D>, _>>()
        .map_err(|e| LibraryError::Csv(format!("{table}: {e}")))
}

/// Reads bus, generator and line tables (header rows required; bus ids are
/// zero-based and must be listed in order; an empty `reference` marks a
/// non-reference bus).
pub fn read_network_csv<T: Scalar>(
    buses: impl Read,
    generators: impl Read,
    lines: impl Read,
    beta: T,
) -> Result<PowerNetwork<T>, LibraryError> {
    let bus_rows: Vec<BusRow> = rows(buses, "buses")?;
    let mut out: Vec<Bus<T>> = Vec::with_capacity(bus_rows.len());
    for (k, r) in bus_rows.into_iter().enumerate() {
        if r.bus != k {
            return Err(LibraryError::Csv(format!("buses: expected bus id {k}, found {}", r.bus)));
        }
        out.push(Bus {
            load: T::lit(r.load),
            generators: Vec::new(),
            angle_min: T::lit(r.angle_min),
            angle_max: T::lit(r.angle_max),
            reference: r.reference.map(T::lit),
        });
    }
    for g in rows::<_, GeneratorRow>(generators, "generators")? {
        let bus = out
            .get_mut(g.bus)
            .ok_or_else(|| LibraryError::Csv(format!("generators: unknown bus {}", g.bus)))?;
        bus.generators.push(Generator { c1: T::lit(g.c1), c2: T::lit(g.c2), pmin: T::lit(g.pmin), pmax: T::lit(g.pmax) });
    }
    let lines = rows::<_, LineRow>(lines, "lines")?
        .into_iter()
        .map(|l| Line { src: l.src, dst: l.dst, admittance: T::lit(l.admittance), angle_limit: T::lit(l.angle_limit) })
        .collect();
    let net = PowerNetwork { buses: out, lines, beta };
    net.validate()?;
    Ok(net)
}
