//! Brane-labelled windowed surfaces and weighted arc graphs with explicit
//! complementary-region decompositions.
//!
//! A windowed surface is an oriented genus-`g` surface with `r >= 1` boundary
//! circles, each carrying a non-empty cyclic sequence of marked points
//! labelled by subsets of the basic brane set, plus labelled punctures. The
//! windows are the boundary segments between consecutive marked points; a
//! window is closed when its endpoints coincide at a single point with empty
//! label, otherwise open.
//!
//! Arcs attach to windows at slots (the linear order of arc ends inside a
//! window, in boundary orientation). Regions — the components of the surface
//! minus the arcs — are stored, not inferred: boundary cycles can be traced
//! from the slot data, but the genus of each region and the puncture
//! assignment cannot, so validation checks the stored decomposition against
//! the traced cycles and the Euler identity.
//!
//! Orientation conventions: boundary circles are traversed with the surface
//! on the left; a region boundary is traced by walking along the boundary
//! until an arc end is hit, crossing the arc, and continuing along the
//! boundary from the far end. The side of an arc entered at its first end is
//! `L`, at its second end `R`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A brane label: a finite set of basic labels. Empty marks the closed
/// sector.
pub type Brane = BTreeSet<String>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Puncture {
    pub id: String,
    pub label: Brane,
}

/// Combinatorial windowed surface.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WindowedSurface {
    pub genus: usize,
    /// Marked point labels per boundary circle, in orientation order.
    pub boundaries: Vec<Vec<Brane>>,
    pub punctures: Vec<Puncture>,
}

/// A window in the flat enumeration: boundary circles in order, windows
/// within a boundary in orientation order. Window `j` of a boundary with `m`
/// points runs from point `j` to point `(j+1) % m`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Window {
    pub boundary: usize,
    pub pos: usize,
    pub start_label: Brane,
    pub end_label: Brane,
}

impl Window {
    /// Closed iff the endpoints coincide at a single empty-labelled point.
    pub fn is_closed(&self) -> bool {
        self.start_label.is_empty()
    }
}

impl WindowedSurface {
    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * self.genus as i64 - self.boundaries.len() as i64
    }

    /// Flat window list.
    pub fn windows(&self) -> Vec<Window> {
        let mut out = Vec::new();
        for (b, pts) in self.boundaries.iter().enumerate() {
            let m = pts.len();
            for j in 0..m {
                out.push(Window {
                    boundary: b,
                    pos: j,
                    start_label: pts[j].clone(),
                    end_label: pts[(j + 1) % m].clone(),
                });
            }
        }
        out
    }

    pub fn window_count(&self) -> usize {
        self.boundaries.iter().map(|b| b.len()).sum()
    }

    /// Flat index of window `pos` on boundary `b`.
    pub fn window_index(&self, b: usize, pos: usize) -> usize {
        self.boundaries[..b].iter().map(|x| x.len()).sum::<usize>() + pos
    }

    pub fn validate(&self) -> Result<()> {
        if self.boundaries.is_empty() {
            return Err(Error::MalformedSurface { detail: "no boundary circles".into() });
        }
        for (b, pts) in self.boundaries.iter().enumerate() {
            if pts.is_empty() {
                return Err(Error::MalformedSurface {
                    detail: format!("boundary {b} has no marked point"),
                });
            }
            if pts.len() > 1 && pts.iter().any(|l| l.is_empty()) {
                return Err(Error::MalformedSurface {
                    detail: format!(
                        "boundary {b}: an empty-labelled point must be the unique point of its boundary"
                    ),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for p in &self.punctures {
            if !seen.insert(&p.id) {
                return Err(Error::MalformedSurface {
                    detail: format!("duplicate puncture id '{}'", p.id),
                });
            }
        }
        Ok(())
    }
}

/// Which side of an arc a region sees: `L` is the side entered when crossing
/// from the first end, `R` from the second.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::L => Side::R,
            Side::R => Side::L,
        }
    }
}

/// One weighted arc (band). Ends are (window flat index, slot).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ArcBand {
    pub ends: [(usize, usize); 2],
    pub weight: u64,
}

/// Item of a region boundary cycle.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum CycleItem {
    Arc { arc: usize, side: Side },
    Piece { piece: usize },
}

/// A complementary region: genus, contained punctures, and boundary cycles of
/// alternating arc sides and boundary pieces.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Region {
    pub genus: usize,
    pub punctures: BTreeSet<String>,
    pub cycles: Vec<Vec<CycleItem>>,
}

impl Region {
    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * self.genus as i64 - self.cycles.len() as i64
    }

    /// Polygon: genus zero with a single boundary cycle.
    pub fn is_polygon(&self) -> bool {
        self.genus == 0 && self.cycles.len() == 1
    }
}

/// A weighted arc graph on a windowed surface with its stored region
/// decomposition.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ArcGraph {
    pub surface: WindowedSurface,
    pub arcs: Vec<ArcBand>,
    pub regions: Vec<Region>,
}

/// A boundary piece: a component of the boundary minus the arc endpoints.
/// A boundary without arc ends is one circular piece.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PieceInfo {
    pub boundary: usize,
    /// Index among the boundary's arc-end events; `None` for a circle piece.
    pub start_event: Option<usize>,
    /// Marked points contained, as boundary-local point indices, in order.
    pub points: Vec<usize>,
    /// Windows met by this piece, in order; a piece with no points lies in
    /// exactly one window.
    pub windows: Vec<usize>,
}

/// Boundary structure shared by arc-level graphs and leaf-level expansions.
#[derive(Clone, Debug)]
pub struct BoundaryData {
    /// Arc-end events per boundary, in circular order; entries are (arc, end).
    pub events: Vec<Vec<(usize, u8)>>,
    pub pieces: Vec<PieceInfo>,
    /// Global piece index following a given event.
    pub piece_after: BTreeMap<(usize, u8), usize>,
    /// Global piece index ending at a given event.
    pub piece_before: BTreeMap<(usize, u8), usize>,
    /// Per-boundary offset into the global piece table.
    pub piece_offset: Vec<usize>,
}

/// Ends of each arc grouped per window, in slot order. Rejects slot tables
/// that are not consecutive from zero.
pub fn ends_by_window(window_count: usize, arcs: &[ArcBand]) -> Result<Vec<Vec<(usize, u8)>>> {
    let mut per: Vec<Vec<(usize, (usize, u8))>> = vec![Vec::new(); window_count];
    for (a, arc) in arcs.iter().enumerate() {
        for (e, &(w, slot)) in arc.ends.iter().enumerate() {
            if w >= window_count {
                return Err(Error::MalformedGraph {
                    detail: format!("arc {a} references window {w} out of range"),
                });
            }
            per[w].push((slot, (a, e as u8)));
        }
    }
    let mut out = Vec::with_capacity(window_count);
    for (w, mut v) in per.into_iter().enumerate() {
        v.sort();
        for (i, (slot, _)) in v.iter().enumerate() {
            if *slot != i {
                return Err(Error::MalformedGraph {
                    detail: format!("window {w} slots are not consecutive from 0"),
                });
            }
        }
        out.push(v.into_iter().map(|(_, e)| e).collect());
    }
    Ok(out)
}

/// Compute events and boundary pieces from per-window arc ends.
pub fn boundary_data(surface: &WindowedSurface, per_window: &[Vec<(usize, u8)>]) -> BoundaryData {
    #[derive(Clone)]
    enum Item {
        Point(usize),
        Event(usize, u8),
    }

    let mut events: Vec<Vec<(usize, u8)>> = vec![Vec::new(); surface.boundaries.len()];
    let mut items: Vec<Vec<Item>> = vec![Vec::new(); surface.boundaries.len()];
    let mut flat = 0usize;
    for (b, pts) in surface.boundaries.iter().enumerate() {
        for j in 0..pts.len() {
            items[b].push(Item::Point(j));
            for &(arc, end) in &per_window[flat] {
                items[b].push(Item::Event(arc, end));
                events[b].push((arc, end));
            }
            flat += 1;
        }
    }

    let mut pieces = Vec::new();
    let mut piece_after = BTreeMap::new();
    let mut piece_before = BTreeMap::new();
    let mut piece_offset = Vec::with_capacity(surface.boundaries.len());

    for (b, its) in items.iter().enumerate() {
        piece_offset.push(pieces.len());
        if events[b].is_empty() {
            pieces.push(PieceInfo {
                boundary: b,
                start_event: None,
                points: (0..surface.boundaries[b].len()).collect(),
                windows: (0..surface.boundaries[b].len())
                    .map(|j| surface.window_index(b, j))
                    .collect(),
            });
            continue;
        }
        let ev_pos: Vec<usize> = its
            .iter()
            .enumerate()
            .filter(|(_, i)| matches!(i, Item::Event(..)))
            .map(|(p, _)| p)
            .collect();
        let m = its.len();
        for (k, &start) in ev_pos.iter().enumerate() {
            let end = ev_pos[(k + 1) % ev_pos.len()];
            // Window containing the start of the piece: the nearest point at
            // or before the start event.
            let start_window = {
                let mut q = start;
                loop {
                    if let Item::Point(j) = its[q] {
                        break surface.window_index(b, j);
                    }
                    q = (q + m - 1) % m;
                }
            };
            let mut points = Vec::new();
            let mut wins = vec![start_window];
            let mut p = (start + 1) % m;
            while p != end {
                if let Item::Point(j) = its[p] {
                    points.push(j);
                    wins.push(surface.window_index(b, j));
                }
                p = (p + 1) % m;
            }
            let (sa, se) = match its[start] {
                Item::Event(a, e) => (a, e),
                Item::Point(_) => unreachable!(),
            };
            let (ea, ee) = match its[end] {
                Item::Event(a, e) => (a, e),
                Item::Point(_) => unreachable!(),
            };
            piece_after.insert((sa, se), pieces.len());
            piece_before.insert((ea, ee), pieces.len());
            pieces.push(PieceInfo { boundary: b, start_event: Some(k), points, windows: wins });
        }
    }
    BoundaryData { events, pieces, piece_after, piece_before, piece_offset }
}

/// Trace all region boundary cycles from the slot adjacency data: walk a
/// piece, cross the arc delimiting its far end, continue with the piece after
/// the other end of that arc.
pub fn trace_cycles(bd: &BoundaryData) -> Vec<Vec<CycleItem>> {
    let mut used = vec![false; bd.pieces.len()];
    let mut out = Vec::new();
    for start in 0..bd.pieces.len() {
        if used[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut p = start;
        loop {
            used[p] = true;
            cycle.push(CycleItem::Piece { piece: p });
            let info = &bd.pieces[p];
            let Some(k) = info.start_event else {
                break; // circle piece: a cycle on its own
            };
            let evs = &bd.events[info.boundary];
            let (arc, end) = evs[(k + 1) % evs.len()];
            cycle.push(CycleItem::Arc { arc, side: if end == 0 { Side::L } else { Side::R } });
            let other = (arc, 1 - end);
            p = *bd.piece_after.get(&other).expect("far arc end has a following piece");
            if p == start {
                break;
            }
        }
        out.push(cycle);
    }
    out
}

/// Rotate a cyclic item sequence to its lexicographically least form.
pub fn canonical_rotation(cycle: &[CycleItem]) -> Vec<CycleItem> {
    let n = cycle.len();
    let mut best: Option<Vec<CycleItem>> = None;
    for r in 0..n {
        let rotated: Vec<CycleItem> = (0..n).map(|i| cycle[(r + i) % n]).collect();
        if best.as_ref().is_none_or(|b| rotated < *b) {
            best = Some(rotated);
        }
    }
    best.unwrap_or_default()
}

impl ArcGraph {
    pub fn window_count(&self) -> usize {
        self.surface.window_count()
    }

    /// Arcter ends per window in slot order.
    pub fn ends_by_window(&self) -> Result<Vec<Vec<(usize, u8)>>> {
        ends_by_window(self.window_count(), &self.arcs)
    }

    pub fn boundary_data(&self) -> Result<BoundaryData> {
        Ok(boundary_data(&self.surface, &self.ends_by_window()?))
    }

    /// The window weight: sum of the weights of arcs with an endpoint in the
    /// window, counted with multiplicity (an arc with both ends in the window
    /// counts twice).
    pub fn window_weight(&self, window: usize) -> u64 {
        let mut total = 0;
        for arc in &self.arcs {
            for &(w, _) in &arc.ends {
                if w == window {
                    total += arc.weight;
                }
            }
        }
        total
    }

    pub fn window_weights(&self) -> Vec<u64> {
        (0..self.window_count()).map(|w| self.window_weight(w)).collect()
    }

    /// Active iff an arc has an endpoint in the window.
    pub fn is_active(&self, window: usize) -> bool {
        self.window_weight(window) > 0
    }

    /// Validate every structural and topological invariant, naming the first
    /// violated one.
    pub fn validate(&self) -> Result<()> {
        self.surface.validate()?;
        for (i, arc) in self.arcs.iter().enumerate() {
            if arc.weight == 0 {
                return Err(Error::MalformedGraph { detail: format!("arc {i} has zero weight") });
            }
        }
        let bd = self.boundary_data()?;
        let traced = trace_cycles(&bd);

        // Stored cycles must match traced cycles bijectively, up to rotation.
        let mut traced_canon: BTreeMap<Vec<CycleItem>, usize> = BTreeMap::new();
        for c in &traced {
            *traced_canon.entry(canonical_rotation(c)).or_insert(0) += 1;
        }
        let mut stored_count = 0;
        for region in &self.regions {
            for c in &region.cycles {
                stored_count += 1;
                let canon = canonical_rotation(c);
                match traced_canon.get_mut(&canon) {
                    Some(n) if *n > 0 => *n -= 1,
                    _ => {
                        return Err(Error::SideUsage {
                            detail: format!(
                                "stored cycle {canon:?} does not match the traced decomposition"
                            ),
                        })
                    }
                }
            }
        }
        if stored_count != traced.len() {
            return Err(Error::SideUsage {
                detail: format!(
                    "stored regions carry {stored_count} cycles, tracing finds {}",
                    traced.len()
                ),
            });
        }

        for region in &self.regions {
            if !region.is_polygon() || !region.punctures.is_empty() {
                continue;
            }
            let cycle = &region.cycles[0];
            // Parallel arcs: an unmarked rectangle between two distinct arcs.
            if cycle.len() == 4 {
                if let (
                    CycleItem::Arc { arc: a, .. },
                    CycleItem::Piece { piece: p },
                    CycleItem::Arc { arc: b, .. },
                    CycleItem::Piece { piece: q },
                ) = (cycle[1], cycle[0], cycle[3], cycle[2])
                {
                    if a != b && bd.pieces[p].points.is_empty() && bd.pieces[q].points.is_empty()
                    {
                        return Err(Error::ParallelArcs { arcs: (a.min(b), a.max(b)) });
                    }
                }
            }
            // Inessential arc: a bigon against a boundary stretch free of
            // labelled points (empty-labelled points do not obstruct the
            // homotopy into the boundary).
            if cycle.len() == 2 {
                if let (CycleItem::Piece { piece: p }, CycleItem::Arc { arc: a, .. }) =
                    (cycle[0], cycle[1])
                {
                    let info = &bd.pieces[p];
                    let unlabelled = info
                        .points
                        .iter()
                        .all(|&j| self.surface.boundaries[info.boundary][j].is_empty());
                    if unlabelled {
                        return Err(Error::InessentialArc { arc: a });
                    }
                }
            }
        }

        // Euler identity: sum chi(region) = chi(surface) + #arcs.
        let total: i64 = self.regions.iter().map(|r| r.euler_characteristic()).sum();
        let expected = self.surface.euler_characteristic() + self.arcs.len() as i64;
        if total != expected {
            return Err(Error::EulerMismatch { regions_total: total, expected });
        }

        // Punctures: each assigned to exactly one region.
        let mut assigned: BTreeMap<&str, usize> = BTreeMap::new();
        for region in &self.regions {
            for p in &region.punctures {
                *assigned.entry(p).or_insert(0) += 1;
            }
        }
        for p in &self.surface.punctures {
            if assigned.get(p.id.as_str()).copied().unwrap_or(0) != 1 {
                return Err(Error::OrphanPuncture { puncture: p.id.clone() });
            }
        }
        let known: BTreeSet<&str> = self.surface.punctures.iter().map(|p| p.id.as_str()).collect();
        for id in assigned.keys() {
            if !known.contains(id) {
                return Err(Error::OrphanPuncture { puncture: (*id).into() });
            }
        }
        Ok(())
    }

    /// Combinatorial isomorphism via canonical forms: a label-, weight-,
    /// orientation- and region-structure-preserving relabelling. This is the
    /// implemented surrogate for mapping-class-group orbit equality; for
    /// graphs with polygonal regions the combinatorial type determines the
    /// orbit.
    pub fn isomorphic(&self, other: &ArcGraph) -> bool {
        canonical_encoding(self, false) == canonical_encoding(other, false)
    }

    /// Isomorphism ignoring arc weights (the combinatorial type of a cell).
    pub fn isomorphic_unweighted(&self, other: &ArcGraph) -> bool {
        canonical_encoding(self, true) == canonical_encoding(other, true)
    }
}

/// Relabel a graph by a boundary permutation and per-boundary rotations;
/// `perm[new_b] = old_b`, rotation `r` makes old point `r` the new point 0.
/// Arcs are renumbered into a sorted normal form and region references
/// remapped, so equal outputs mean isomorphic inputs.
pub fn relabel(graph: &ArcGraph, perm: &[usize], rots: &[usize]) -> ArcGraph {
    let old_surface = &graph.surface;
    let mut boundaries = Vec::with_capacity(old_surface.boundaries.len());
    let mut wmap: BTreeMap<usize, usize> = BTreeMap::new();
    let mut new_flat = 0;
    for (new_b, &old_b) in perm.iter().enumerate() {
        let pts = &old_surface.boundaries[old_b];
        let m = pts.len();
        let r = rots[new_b];
        let rotated: Vec<Brane> = (0..m).map(|j| pts[(j + r) % m].clone()).collect();
        for j in 0..m {
            let old_w = old_surface.window_index(old_b, (j + r) % m);
            wmap.insert(old_w, new_flat);
            new_flat += 1;
        }
        boundaries.push(rotated);
    }
    let surface = WindowedSurface {
        genus: old_surface.genus,
        boundaries,
        punctures: old_surface.punctures.clone(),
    };
    let mut normed: Vec<(ArcBand, bool)> = graph
        .arcs
        .iter()
        .map(|a| {
            let mut ends = [
                (wmap[&a.ends[0].0], a.ends[0].1),
                (wmap[&a.ends[1].0], a.ends[1].1),
            ];
            let flipped = ends[1] < ends[0];
            if flipped {
                ends.swap(0, 1);
            }
            (ArcBand { ends, weight: a.weight }, flipped)
        })
        .collect();
    let mut order: Vec<usize> = (0..normed.len()).collect();
    order.sort_by(|&x, &y| {
        (&normed[x].0.ends, normed[x].0.weight).cmp(&(&normed[y].0.ends, normed[y].0.weight))
    });
    let mut amap = vec![0usize; normed.len()];
    for (new_idx, &old_idx) in order.iter().enumerate() {
        amap[old_idx] = new_idx;
    }
    let sorted_arcs: Vec<ArcBand> = order.iter().map(|&i| normed[i].0.clone()).collect();
    let flipped: Vec<bool> = {
        let mut f = vec![false; normed.len()];
        for (old_idx, (_, fl)) in normed.iter_mut().enumerate() {
            f[old_idx] = *fl;
        }
        f
    };

    // Piece ids are positional; recompute them on the relabelled graph and
    // match through the delimiting events.
    let g2 = ArcGraph { surface: surface.clone(), arcs: sorted_arcs.clone(), regions: Vec::new() };
    let old_bd = graph.boundary_data().expect("relabel expects a well-formed graph");
    let new_bd = g2.boundary_data().expect("relabelled graph is well-formed");
    let mut pmap: BTreeMap<usize, usize> = BTreeMap::new();
    for (old_id, info) in old_bd.pieces.iter().enumerate() {
        match info.start_event {
            None => {
                let new_b = perm.iter().position(|&ob| ob == info.boundary).unwrap();
                pmap.insert(old_id, new_bd.piece_offset[new_b]);
            }
            Some(k) => {
                let (arc, end) = old_bd.events[info.boundary][k];
                let nend = if flipped[arc] { 1 - end } else { end };
                pmap.insert(old_id, new_bd.piece_after[&(amap[arc], nend)]);
            }
        }
    }

    let regions: Vec<Region> = graph
        .regions
        .iter()
        .map(|r| Region {
            genus: r.genus,
            punctures: r.punctures.clone(),
            cycles: r
                .cycles
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|item| match *item {
                            CycleItem::Arc { arc, side } => CycleItem::Arc {
                                arc: amap[arc],
                                side: if flipped[arc] { side.flip() } else { side },
                            },
                            CycleItem::Piece { piece } => CycleItem::Piece { piece: pmap[&piece] },
                        })
                        .collect()
                })
                .collect(),
        })
        .collect();

    ArcGraph { surface, arcs: sorted_arcs, regions }
}

/// Serialize a relabelled graph into a stable comparable form. Puncture ids
/// are replaced by their labels; cycles and regions are canonically ordered.
fn encode(graph: &ArcGraph, ignore_weights: bool) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    let _ = write!(s, "g{};", graph.surface.genus);
    for b in &graph.surface.boundaries {
        let _ = write!(s, "B[");
        for pt in b {
            let _ = write!(s, "{pt:?},");
        }
        let _ = write!(s, "];");
    }
    for a in &graph.arcs {
        let w = if ignore_weights { 1 } else { a.weight };
        let _ = write!(s, "A{:?}w{};", a.ends, w);
    }
    let mut regions: Vec<String> = graph
        .regions
        .iter()
        .map(|r| {
            let mut cycles: Vec<Vec<CycleItem>> =
                r.cycles.iter().map(|c| canonical_rotation(c)).collect();
            cycles.sort();
            let mut labels: Vec<&Brane> = r
                .punctures
                .iter()
                .map(|id| {
                    &graph
                        .surface
                        .punctures
                        .iter()
                        .find(|p| &p.id == id)
                        .expect("assigned puncture exists")
                        .label
                })
                .collect();
            labels.sort();
            format!("R(g{},p{:?},c{:?})", r.genus, labels, cycles)
        })
        .collect();
    regions.sort();
    for r in regions {
        let _ = write!(s, "{r};");
    }
    let mut plabels: Vec<&Brane> = graph.surface.punctures.iter().map(|p| &p.label).collect();
    plabels.sort();
    let _ = write!(s, "P{plabels:?}");
    s
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

/// Canonical encoding: minimum over all boundary permutations and rotations
/// of the stable serialization. Two graphs are isomorphic iff their canonical
/// encodings agree.
pub fn canonical_encoding(graph: &ArcGraph, ignore_weights: bool) -> String {
    let b = graph.surface.boundaries.len();
    let mut best: Option<String> = None;
    for perm in permutations(b) {
        let sizes: Vec<usize> =
            perm.iter().map(|&ob| graph.surface.boundaries[ob].len()).collect();
        let mut rots = vec![0usize; b];
        loop {
            let candidate = encode(&relabel(graph, &perm, &rots), ignore_weights);
            if best.as_ref().is_none_or(|x| candidate < *x) {
                best = Some(candidate);
            }
            let mut i = 0;
            loop {
                if i == b {
                    break;
                }
                rots[i] += 1;
                if rots[i] < sizes[i] {
                    break;
                }
                rots[i] = 0;
                i += 1;
            }
            if i == b {
                break;
            }
        }
    }
    best.expect("at least one labelling")
}

/// A discretely weighted arc graph expanded into its leaf representation:
/// each weight-`w` band becomes `w` parallel leaves (slot blocks contiguous,
/// order reversed at the far end — untwisted bands), inserting `w - 1`
/// rectangle regions per band.
#[derive(Clone, Debug)]
pub struct DiscreteGraph {
    pub surface: WindowedSurface,
    /// Leaves as weight-1 bands; indexes are leaf ids.
    pub leaves: Vec<ArcBand>,
    /// Originating arc per leaf.
    pub band_of: Vec<usize>,
    /// Regions over leaf-level items: `Arc` indexes a leaf.
    pub regions: Vec<Region>,
}

impl DiscreteGraph {
    pub fn boundary_data(&self) -> Result<BoundaryData> {
        let wc = self.surface.window_count();
        Ok(boundary_data(&self.surface, &ends_by_window(wc, &self.leaves)?))
    }

    pub fn window_leaf_count(&self, window: usize) -> usize {
        self.leaves.iter().flat_map(|l| l.ends.iter()).filter(|&&(w, _)| w == window).count()
    }

    /// Euler identity at leaf level: region characteristics sum to the
    /// surface characteristic plus the leaf count.
    pub fn check_euler(&self) -> Result<()> {
        let total: i64 = self.regions.iter().map(|r| r.euler_characteristic()).sum();
        let expected = self.surface.euler_characteristic() + self.leaves.len() as i64;
        if total != expected {
            return Err(Error::EulerMismatch { regions_total: total, expected });
        }
        Ok(())
    }
}

/// A positive integer weighting of the arcs, overriding the stored weights.
pub type DiscreteWeighting = Vec<u64>;

/// Expand a validated graph at the given weighting into its leaf
/// representation with refined regions.
pub fn discrete_representative(
    graph: &ArcGraph,
    weighting: &DiscreteWeighting,
) -> Result<DiscreteGraph> {
    if weighting.len() != graph.arcs.len() || weighting.iter().any(|&w| w == 0) {
        return Err(Error::MalformedGraph {
            detail: "weighting must assign a positive weight to every arc".into(),
        });
    }
    let per_window = graph.ends_by_window()?;

    // Leaf-level block start of each arc end within its window.
    let mut block_start: BTreeMap<(usize, u8), usize> = BTreeMap::new();
    for ends in per_window.iter() {
        let mut pos = 0usize;
        for &(arc, end) in ends {
            block_start.insert((arc, end), pos);
            pos += weighting[arc] as usize;
        }
    }

    let mut leaves = Vec::new();
    let mut band_of = Vec::new();
    let mut leaf_ids: Vec<Vec<usize>> = Vec::new();
    for (a, arc) in graph.arcs.iter().enumerate() {
        let wt = weighting[a] as usize;
        let (w0, _) = arc.ends[0];
        let (w1, _) = arc.ends[1];
        let b0 = block_start[&(a, 0)];
        let b1 = block_start[&(a, 1)];
        let mut ids = Vec::with_capacity(wt);
        for j in 0..wt {
            ids.push(leaves.len());
            leaves.push(ArcBand { ends: [(w0, b0 + j), (w1, b1 + (wt - 1 - j))], weight: 1 });
            band_of.push(a);
        }
        leaf_ids.push(ids);
    }

    let dg_partial = DiscreteGraph {
        surface: graph.surface.clone(),
        leaves: leaves.clone(),
        band_of: band_of.clone(),
        regions: Vec::new(),
    };
    let leaf_bd = dg_partial.boundary_data()?;
    let arc_bd = graph.boundary_data()?;

    // An arc-level piece starting after (arc, end) starts after the last
    // leaf of that block at leaf level: leaf wt-1 at end 0 (ascending) and
    // leaf 0 at end 1 (order reversed across the band).
    let mut piece_map: BTreeMap<usize, usize> = BTreeMap::new();
    for (old_id, info) in arc_bd.pieces.iter().enumerate() {
        match info.start_event {
            None => {
                piece_map.insert(old_id, leaf_bd.piece_offset[info.boundary]);
            }
            Some(k) => {
                let (arc, end) = arc_bd.events[info.boundary][k];
                let wt = weighting[arc] as usize;
                let leaf = if end == 0 { leaf_ids[arc][wt - 1] } else { leaf_ids[arc][0] };
                piece_map.insert(old_id, leaf_bd.piece_after[&(leaf, end)]);
            }
        }
    }

    // Regions: original regions with band-extreme leaf sides, plus the band
    // rectangles. Side L of a band belongs to leaf 0, side R to leaf wt-1.
    let mut regions: Vec<Region> = graph
        .regions
        .iter()
        .map(|r| Region {
            genus: r.genus,
            punctures: r.punctures.clone(),
            cycles: r
                .cycles
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|item| match *item {
                            CycleItem::Arc { arc, side } => {
                                let wt = weighting[arc] as usize;
                                let leaf = match side {
                                    Side::L => leaf_ids[arc][0],
                                    Side::R => leaf_ids[arc][wt - 1],
                                };
                                CycleItem::Arc { arc: leaf, side }
                            }
                            CycleItem::Piece { piece } => {
                                CycleItem::Piece { piece: piece_map[&piece] }
                            }
                        })
                        .collect()
                })
                .collect(),
        })
        .collect();

    for ids in leaf_ids.iter() {
        for j in 0..ids.len().saturating_sub(1) {
            let p0 = leaf_bd.piece_after[&(ids[j], 0)];
            let p1 = leaf_bd.piece_after[&(ids[j + 1], 1)];
            regions.push(Region {
                genus: 0,
                punctures: BTreeSet::new(),
                cycles: vec![vec![
                    CycleItem::Piece { piece: p0 },
                    CycleItem::Arc { arc: ids[j + 1], side: Side::L },
                    CycleItem::Piece { piece: p1 },
                    CycleItem::Arc { arc: ids[j], side: Side::R },
                ]],
            });
        }
    }

    let dg = DiscreteGraph { surface: graph.surface.clone(), leaves, band_of, regions };
    dg.check_euler()?;

    debug_assert!({
        let traced = trace_cycles(&leaf_bd);
        let mut tc: Vec<Vec<CycleItem>> = traced.iter().map(|c| canonical_rotation(c)).collect();
        tc.sort();
        let mut sc: Vec<Vec<CycleItem>> = dg
            .regions
            .iter()
            .flat_map(|r| r.cycles.iter().map(|c| canonical_rotation(c)))
            .collect();
        sc.sort();
        tc == sc
    });
    Ok(dg)
}

#[cfg(test)]
pub mod fixtures {
    use super::*;
    use alloc::string::ToString;

    pub fn brane(s: &str) -> Brane {
        let mut b = BTreeSet::new();
        if !s.is_empty() {
            b.insert(s.to_string());
        }
        b
    }

    /// The triangle: disk with points T, S, U; arcs e1: w1-w3, e2: w2-w3.
    /// Windows: w1 = 0 (T->S), w2 = 1 (S->U), w3 = 2 (U->T); w3 slot order is
    /// e2 (near U) then e1 (near T).
    pub fn graph_tri(labels: [&str; 3], w1: u64, w2: u64) -> ArcGraph {
        let surface = WindowedSurface {
            genus: 0,
            boundaries: vec![vec![brane(labels[0]), brane(labels[1]), brane(labels[2])]],
            punctures: vec![],
        };
        let arcs = vec![
            ArcBand { ends: [(0, 0), (2, 1)], weight: w1 },
            ArcBand { ends: [(1, 0), (2, 0)], weight: w2 },
        ];
        let regions = vec![
            Region {
                genus: 0,
                punctures: BTreeSet::new(),
                cycles: vec![vec![
                    CycleItem::Piece { piece: 3 },
                    CycleItem::Arc { arc: 0, side: Side::L },
                ]],
            },
            Region {
                genus: 0,
                punctures: BTreeSet::new(),
                cycles: vec![vec![
                    CycleItem::Piece { piece: 1 },
                    CycleItem::Arc { arc: 1, side: Side::R },
                ]],
            },
            Region {
                genus: 0,
                punctures: BTreeSet::new(),
                cycles: vec![vec![
                    CycleItem::Piece { piece: 0 },
                    CycleItem::Arc { arc: 1, side: Side::L },
                    CycleItem::Piece { piece: 2 },
                    CycleItem::Arc { arc: 0, side: Side::R },
                ]],
            },
        ];
        ArcGraph { surface, arcs, regions }
    }

    /// Annulus with closed windows on both boundaries and one arc.
    pub fn annulus_closed(weight: u64) -> ArcGraph {
        let surface = WindowedSurface {
            genus: 0,
            boundaries: vec![vec![brane("")], vec![brane("")]],
            punctures: vec![],
        };
        let arcs = vec![ArcBand { ends: [(0, 0), (1, 0)], weight }];
        let regions = vec![Region {
            genus: 0,
            punctures: BTreeSet::new(),
            cycles: vec![vec![
                CycleItem::Piece { piece: 0 },
                CycleItem::Arc { arc: 0, side: Side::L },
                CycleItem::Piece { piece: 1 },
                CycleItem::Arc { arc: 0, side: Side::R },
            ]],
        }];
        ArcGraph { surface, arcs, regions }
    }
}
