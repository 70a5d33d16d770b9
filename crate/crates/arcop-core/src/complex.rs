//! Quotient polygonal complexes: the engine behind region recomputation.
//!
//! Gluing is performed by assembling the complementary regions of the two
//! discrete representatives as tiles of a polygonal complex, identifying
//! sides pairwise (window sub-intervals with window sub-intervals, and both
//! sides of every deleted leaf), and reading off the merged regions: their
//! Euler characteristics from vertex/edge/tile counts, their boundary cycles
//! by a corner walk, their genus from `chi = 2 - 2h - b`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::surface::Side;

/// A directed side of a tile: a leaf side or an atomic boundary interval.
/// `tag` distinguishes the two glued graphs. Every value occurs exactly once
/// across all tile cycles.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub(crate) enum CEdge {
    Leaf { tag: u8, leaf: usize, side: Side },
    Atom { tag: u8, atom: usize },
}

/// A tile: one complementary region of a discrete representative.
#[derive(Clone, Debug)]
pub(crate) struct CTile {
    pub genus: usize,
    pub punctures: BTreeSet<String>,
    pub cycles: Vec<Vec<CEdge>>,
}

impl CTile {
    fn euler_characteristic(&self) -> i64 {
        2 - 2 * self.genus as i64 - self.cycles.len() as i64
    }
}

/// A merged region of the quotient.
#[derive(Clone, Debug)]
pub(crate) struct QRegion {
    pub genus: usize,
    pub punctures: BTreeSet<String>,
    /// Boundary cycles over the surviving (unpaired) edges.
    pub boundary: Vec<Vec<CEdge>>,
    /// Paired edges swallowed by this region; used to locate new punctures.
    pub interior: BTreeSet<CEdge>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Occurrence of an edge: (tile, cycle, position).
type Occ = (usize, usize, usize);

/// Compute the quotient of the tiles under the given side identifications.
///
/// Each pair identifies two distinct edge values direction-reversingly (the
/// assembled surface is oriented). Regions are the edge-connected components
/// of tiles; a vertex shared by several regions counts once in each, which is
/// what the per-region Euler characteristic needs.
pub(crate) fn quotient(tiles: &[CTile], pairs: &[(CEdge, CEdge)]) -> Result<Vec<QRegion>> {
    // Index occurrences.
    let mut occ_of: BTreeMap<CEdge, Occ> = BTreeMap::new();
    for (t, tile) in tiles.iter().enumerate() {
        for (c, cycle) in tile.cycles.iter().enumerate() {
            for (p, e) in cycle.iter().enumerate() {
                if occ_of.insert(*e, (t, c, p)).is_some() {
                    return Err(Error::SideUsage {
                        detail: format!("edge {e:?} occurs twice among the tiles"),
                    });
                }
            }
        }
    }
    let mut partner: BTreeMap<CEdge, CEdge> = BTreeMap::new();
    for (a, b) in pairs {
        if a == b || !occ_of.contains_key(a) || !occ_of.contains_key(b) {
            return Err(Error::SideUsage { detail: format!("bad identification {a:?} ~ {b:?}") });
        }
        if partner.insert(*a, *b).is_some() || partner.insert(*b, *a).is_some() {
            return Err(Error::SideUsage {
                detail: format!("edge identified twice in {a:?} ~ {b:?}"),
            });
        }
    }

    // Edge-connected components of tiles.
    let mut uf = UnionFind::new(tiles.len());
    for (a, b) in pairs {
        uf.union(occ_of[a].0, occ_of[b].0);
    }

    // Corners: two per occurrence. Corner ids: occ index * 2 + {0 start, 1 end}.
    let mut occ_list: Vec<(CEdge, Occ)> = occ_of.iter().map(|(e, o)| (*e, *o)).collect();
    occ_list.sort_by_key(|(_, o)| *o);
    let occ_index: BTreeMap<CEdge, usize> =
        occ_list.iter().enumerate().map(|(i, (e, _))| (*e, i)).collect();
    let mut corners = UnionFind::new(occ_list.len() * 2);
    // Within-cycle adjacency: end of item i ~ start of item i+1.
    for (t, tile) in tiles.iter().enumerate() {
        for (c, cycle) in tile.cycles.iter().enumerate() {
            let n = cycle.len();
            for p in 0..n {
                let e = occ_index[&cycle[p]];
                let f = occ_index[&cycle[(p + 1) % n]];
                corners.union(e * 2 + 1, f * 2);
                let _ = (t, c);
            }
        }
    }
    // Across pairings (direction-reversing): start(a) ~ end(b), end(a) ~ start(b).
    for (a, b) in pairs {
        let ia = occ_index[a];
        let ib = occ_index[b];
        corners.union(ia * 2, ib * 2 + 1);
        corners.union(ia * 2 + 1, ib * 2);
    }

    // Group tiles by component.
    let mut comp_tiles: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for t in 0..tiles.len() {
        comp_tiles.entry(uf.find(t)).or_default().push(t);
    }

    let mut regions = Vec::new();
    for (_root, tlist) in comp_tiles {
        let tset: BTreeSet<usize> = tlist.iter().copied().collect();
        // Vertex classes and edge classes within the component.
        let mut vclasses: BTreeSet<usize> = BTreeSet::new();
        let mut ecount: i64 = 0;
        let mut seen_pair: BTreeSet<CEdge> = BTreeSet::new();
        let mut interior: BTreeSet<CEdge> = BTreeSet::new();
        let mut unpaired: Vec<CEdge> = Vec::new();
        for (e, (t, _, _)) in &occ_list {
            if !tset.contains(t) {
                continue;
            }
            let i = occ_index[e];
            vclasses.insert(corners.find(i * 2));
            vclasses.insert(corners.find(i * 2 + 1));
            match partner.get(e) {
                Some(p) => {
                    interior.insert(*e);
                    if !seen_pair.contains(e) {
                        ecount += 1;
                        seen_pair.insert(*e);
                        seen_pair.insert(*p);
                    }
                }
                None => {
                    ecount += 1;
                    unpaired.push(*e);
                }
            }
        }
        let tile_chi: i64 = tlist.iter().map(|&t| tiles[t].euler_characteristic()).sum();
        let chi = vclasses.len() as i64 - ecount + tile_chi;

        // Boundary cycles by corner walk: after an unpaired edge, advance in
        // its tile cycle; hop across pairings until the next unpaired edge.
        let next_in_cycle = |e: &CEdge| -> CEdge {
            let (t, c, p) = occ_of[e];
            let cycle = &tiles[t].cycles[c];
            cycle[(p + 1) % cycle.len()]
        };
        let mut used: BTreeSet<CEdge> = BTreeSet::new();
        let mut boundary = Vec::new();
        for start in &unpaired {
            if used.contains(start) {
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = *start;
            loop {
                used.insert(cur);
                cycle.push(cur);
                let mut nxt = next_in_cycle(&cur);
                let mut hops = 0usize;
                while let Some(p) = partner.get(&nxt) {
                    nxt = next_in_cycle(p);
                    hops += 1;
                    if hops > occ_list.len() {
                        return Err(Error::SideUsage {
                            detail: String::from("corner walk does not terminate"),
                        });
                    }
                }
                if nxt == *start {
                    break;
                }
                cur = nxt;
            }
            boundary.push(cycle);
        }

        let b = boundary.len() as i64;
        let two_h = 2 - chi - b;
        if two_h < 0 || two_h % 2 != 0 {
            return Err(Error::SideUsage {
                detail: format!("component has chi {chi} with {b} boundary cycles"),
            });
        }
        let mut punctures = BTreeSet::new();
        for &t in &tlist {
            punctures.extend(tiles[t].punctures.iter().cloned());
        }
        regions.push(QRegion {
            genus: (two_h / 2) as usize,
            punctures,
            boundary,
            interior,
        });
    }
    Ok(regions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn atom(a: usize) -> CEdge {
        CEdge::Atom { tag: 0, atom: a }
    }

    #[test]
    fn two_triangles_glue_to_a_square() {
        // Two triangular disks sharing one identified side.
        let tiles = vec![
            CTile {
                genus: 0,
                punctures: BTreeSet::new(),
                cycles: vec![vec![atom(0), atom(1), atom(2)]],
            },
            CTile {
                genus: 0,
                punctures: BTreeSet::new(),
                cycles: vec![vec![atom(3), atom(4), atom(5)]],
            },
        ];
        let regions = quotient(&tiles, &[(atom(2), atom(5))]).unwrap();
        assert_eq!(regions.len(), 1);
        let r = &regions[0];
        assert_eq!(r.genus, 0);
        assert_eq!(r.boundary.len(), 1);
        assert_eq!(r.boundary[0].len(), 4);
    }

    #[test]
    fn gluing_two_sides_of_one_square_gives_annulus() {
        let tiles = vec![CTile {
            genus: 0,
            punctures: BTreeSet::new(),
            cycles: vec![vec![atom(0), atom(1), atom(2), atom(3)]],
        }];
        // Identify opposite sides: a cylinder with two boundary circles.
        let regions = quotient(&tiles, &[(atom(0), atom(2))]).unwrap();
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].genus, 0);
        assert_eq!(regions[0].boundary.len(), 2);
    }

    #[test]
    fn torus_from_square() {
        // Identify both opposite side pairs: chi = -2 + stuff => torus with
        // no boundary left... with tiles as surfaces-with-boundary this gives
        // a closed torus component: chi 0, 0 boundary cycles, genus 1.
        let tiles = vec![CTile {
            genus: 0,
            punctures: BTreeSet::new(),
            cycles: vec![vec![atom(0), atom(1), atom(2), atom(3)]],
        }];
        let regions = quotient(&tiles, &[(atom(0), atom(2)), (atom(1), atom(3))]).unwrap();
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].boundary.len(), 0);
        assert_eq!(regions[0].genus, 1);
    }

    #[test]
    fn punctures_merge_into_the_component() {
        let tiles = vec![
            CTile {
                genus: 0,
                punctures: BTreeSet::from(["p1".to_string()]),
                cycles: vec![vec![atom(0), atom(1)]],
            },
            CTile {
                genus: 0,
                punctures: BTreeSet::from(["p2".to_string()]),
                cycles: vec![vec![atom(2), atom(3)]],
            },
        ];
        let regions = quotient(&tiles, &[(atom(0), atom(2))]).unwrap();
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].punctures.len(), 2);
        assert!(regions[0].interior.contains(&atom(0)));
    }
}
