use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use super::NetError;

pub type VertexId = usize;
pub type EdgeId = usize;

/// Travel time of a road as a function of the vehicle flow on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DelayFn {
    /// `a + b x`
    Affine { a: f64, b: f64 },
    /// `a (1 + beta (x / c)^4)`
    Bpr { a: f64, beta: f64, c: f64 },
}

impl DelayFn {
    pub fn constant(a: f64) -> Self {
        DelayFn::Affine { a, b: 0.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            DelayFn::Affine { a, b } => a + b * x,
            DelayFn::Bpr { a, beta, c } => a * (1.0 + beta * (x / c).powi(4)),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            DelayFn::Affine { b, .. } => b,
            DelayFn::Bpr { a, beta, c } => 4.0 * a * beta * x.powi(3) / c.powi(4),
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match *self {
            DelayFn::Affine { .. } => 0.0,
            DelayFn::Bpr { a, beta, c } => 12.0 * a * beta * x.powi(2) / c.powi(4),
        }
    }

    /// `d/dx [x f(x)] = f(x) + x f'(x)`
    pub fn marginal_cost(&self, x: f64) -> f64 {
        self.eval(x) + x * self.derivative(x)
    }

    /// Free-flow travel time, `f(0)`.
    pub fn free_flow(&self) -> f64 {
        self.eval(0.0)
    }

    /// Rejects parameters that make the function decreasing, non-convex or
    /// identically zero on `[0, inf)`. An affine delay may start at zero
    /// (the linear road of the Pigou example) as long as it has a slope.
    pub fn validate(&self) -> Result<(), NetError> {
        let ok = match *self {
            DelayFn::Affine { a, b } => {
                a >= 0.0 && b >= 0.0 && a + b > 0.0 && a.is_finite() && b.is_finite()
            }
            DelayFn::Bpr { a, beta, c } => {
                a > 0.0 && beta >= 0.0 && c > 0.0 && a.is_finite() && beta.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(NetError::BadDelay(format!("{self:?}")))
        }
    }

    pub fn to_text(&self) -> String {
        match *self {
            DelayFn::Affine { a, b } => format!("affine {a} {b}"),
            DelayFn::Bpr { a, beta, c } => format!("bpr {a} {beta} {c}"),
        }
    }

    /// Parses `affine <a> <b>` or `bpr <a> <beta> <c>` from already split words.
    pub fn parse_words(words: &[&str]) -> Result<(Self, usize), NetError> {
        let num = |i: usize| -> Result<f64, NetError> {
            words
                .get(i)
                .ok_or_else(|| NetError::Parse(format!("missing delay parameter in {words:?}")))?
                .parse::<f64>()
                .map_err(|_| NetError::Parse(format!("bad number {:?}", words[i])))
        };
        let (f, used) = match words.first().copied() {
            Some("affine") => (
                DelayFn::Affine {
                    a: num(1)?,
                    b: num(2)?,
                },
                3,
            ),
            Some("const") => (DelayFn::constant(num(1)?), 2),
            Some("bpr") => (
                DelayFn::Bpr {
                    a: num(1)?,
                    beta: num(2)?,
                    c: num(3)?,
                },
                4,
            ),
            other => return Err(NetError::Parse(format!("unknown delay kind {other:?}"))),
        };
        f.validate()?;
        Ok((f, used))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub src: VertexId,
    pub dst: VertexId,
    pub delay: DelayFn,
    /// Physical length, used for operating cost and speed checks.
    pub length: f64,
    /// Integer free-flow traversal time in timesteps, at least 1.
    pub tau: u32,
    /// Congestion-free edge added by a train project.
    pub train: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    n: usize,
    edges: Vec<Edge>,
    pub dt: f64,
    pub horizon: u32,
}

impl Network {
    pub fn new(n: usize, dt: f64, horizon: u32) -> Self {
        Self {
            n,
            edges: Vec::new(),
            dt,
            horizon,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn edge_mut(&mut self, id: EdgeId) -> Option<&mut Edge> {
        self.edges.get_mut(id)
    }

    /// Adds an edge with `tau = max(1, ceil(f(0) / dt))` and unit length.
    pub fn add_edge(
        &mut self,
        src: VertexId,
        dst: VertexId,
        delay: DelayFn,
    ) -> Result<EdgeId, NetError> {
        let tau = self.default_tau(&delay);
        self.push_edge(src, dst, delay, 1.0, tau, false)
    }

    pub fn default_tau(&self, delay: &DelayFn) -> u32 {
        ((delay.free_flow() / self.dt).ceil() as u32).max(1)
    }

    pub fn push_edge(
        &mut self,
        src: VertexId,
        dst: VertexId,
        delay: DelayFn,
        length: f64,
        tau: u32,
        train: bool,
    ) -> Result<EdgeId, NetError> {
        for v in [src, dst] {
            if v >= self.n {
                return Err(NetError::UnknownVertex(v));
            }
        }
        delay.validate()?;
        if !(length >= 0.0 && length.is_finite()) || tau == 0 {
            return Err(NetError::Parse(format!(
                "edge {src}->{dst}: bad length or tau"
            )));
        }
        let id = self.edges.len();
        self.edges.push(Edge {
            id,
            src,
            dst,
            delay,
            length,
            tau,
            train,
        });
        Ok(id)
    }

    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.src == v)
    }

    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.dst == v)
    }

    /// Single-source shortest path distances and predecessor edges under
    /// nonnegative per-edge `weights`.
    pub fn dijkstra(&self, src: VertexId, weights: &[f64]) -> (Vec<f64>, Vec<Option<EdgeId>>) {
        let mut adj: Vec<Vec<EdgeId>> = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.src].push(e.id);
        }
        let mut dist = vec![f64::INFINITY; self.n];
        let mut pred = vec![None; self.n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapItem(0.0, src));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &eid in &adj[u] {
                let e = &self.edges[eid];
                let nd = d + weights[eid];
                // strict improvement only, so ties keep the lowest edge id
                if nd < dist[e.dst] {
                    dist[e.dst] = nd;
                    pred[e.dst] = Some(eid);
                    heap.push(HeapItem(nd, e.dst));
                }
            }
        }
        (dist, pred)
    }

    /// Shortest `src -> dst` edge path under `weights`, if reachable.
    pub fn shortest_path(
        &self,
        src: VertexId,
        dst: VertexId,
        weights: &[f64],
    ) -> Option<(Vec<EdgeId>, f64)> {
        let (dist, pred) = self.dijkstra(src, weights);
        if !dist[dst].is_finite() {
            return None;
        }
        let mut path = Vec::new();
        let mut v = dst;
        while v != src {
            let e = pred[v]?;
            path.push(e);
            v = self.edges[e].src;
        }
        path.reverse();
        Some((path, dist[dst]))
    }

    /// Per-edge free-flow traversal steps as weights.
    pub fn tau_weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| f64::from(e.tau)).collect()
    }

    pub fn is_strongly_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let w = vec![1.0; self.edges.len()];
        let fwd = self.dijkstra(0, &w).0;
        let mut rev = Network::new(self.n, self.dt, self.horizon);
        for e in &self.edges {
            rev.edges.push(Edge {
                src: e.dst,
                dst: e.src,
                id: rev.edges.len(),
                ..e.clone()
            });
        }
        let bwd = rev.dijkstra(0, &w).0;
        fwd.iter().chain(bwd.iter()).all(|d| d.is_finite())
    }

    /// Parses the plain-text edge-list format:
    ///
    /// ```text
    /// vertices 3
    /// dt 1
    /// horizon 20
    /// edge 0 1 affine 1 0.5 len=2 tau=1
    /// edge 1 2 bpr 2 0.15 4
    /// ```
    pub fn parse(text: &str) -> Result<Self, NetError> {
        let mut net: Option<Network> = None;
        let (mut dt, mut horizon) = (1.0, 0u32);
        let mut pending = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            let at = |e: NetError| NetError::Line(lineno + 1, Box::new(e));
            match words[0] {
                "vertices" => {
                    let n = parse_num::<usize>(words.get(1)).map_err(at)?;
                    net = Some(Network::new(n, dt, horizon));
                }
                "dt" => dt = parse_num(words.get(1)).map_err(at)?,
                "horizon" => horizon = parse_num(words.get(1)).map_err(at)?,
                "edge" => pending.push((
                    lineno + 1,
                    words.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                )),
                other => return Err(at(NetError::Parse(format!("unknown directive {other:?}")))),
            }
        }
        let mut net = net.ok_or_else(|| NetError::Parse("missing `vertices` line".into()))?;
        net.dt = dt;
        net.horizon = horizon;
        for (lineno, words) in pending {
            let words: Vec<&str> = words.iter().map(String::as_str).collect();
            net.add_edge_words(&words[1..])
                .map_err(|e| NetError::Line(lineno, Box::new(e)))?;
        }
        Ok(net)
    }

    /// Adds an edge from `<src> <dst> <kind> <params...> [len=..] [tau=..] [train]`.
    pub fn add_edge_words(&mut self, words: &[&str]) -> Result<EdgeId, NetError> {
        let src = parse_num::<usize>(words.first())?;
        let dst = parse_num::<usize>(words.get(1))?;
        let (delay, used) = DelayFn::parse_words(&words[2.min(words.len())..])?;
        let mut length = 1.0;
        let mut tau = self.default_tau(&delay);
        let mut train = false;
        for opt in &words[2 + used..] {
            match opt.split_once('=') {
                Some(("len", v)) => length = parse_num(Some(&v))?,
                Some(("tau", v)) => tau = parse_num(Some(&v))?,
                None if *opt == "train" => train = true,
                _ => return Err(NetError::Parse(format!("unknown edge option {opt:?}"))),
            }
        }
        self.push_edge(src, dst, delay, length, tau, train)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "vertices {}", self.n).unwrap();
        writeln!(out, "dt {}", self.dt).unwrap();
        writeln!(out, "horizon {}", self.horizon).unwrap();
        for e in &self.edges {
            write!(
                out,
                "edge {} {} {} len={} tau={}",
                e.src,
                e.dst,
                e.delay.to_text(),
                e.length,
                e.tau
            )
            .unwrap();
            if e.train {
                out.push_str(" train");
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn parse_num<T: std::str::FromStr>(w: Option<&&str>) -> Result<T, NetError> {
    let w = w.ok_or_else(|| NetError::Parse("missing number".into()))?;
    w.parse()
        .map_err(|_| NetError::Parse(format!("bad number {w:?}")))
}

#[derive(PartialEq)]
struct HeapItem(f64, VertexId);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // min-heap on distance, then vertex id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}
