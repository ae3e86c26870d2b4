//! Fixed neighbourhood stencils and the simplices covering their boundary.

use serde::{Deserialize, Serialize};

/// Neighbourhood used by the fast-marching update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Neighborhood {
    /// Axis neighbours in the plane.
    N4,
    /// Axis and diagonal neighbours in the plane.
    N8,
    /// Axis neighbours in 3D.
    N6,
    /// Full 3x3x3 cube in 3D.
    N26,
}

impl Neighborhood {
    pub fn is_3d(self) -> bool {
        matches!(self, Neighborhood::N6 | Neighborhood::N26)
    }
}

/// Simplex on the stencil boundary seen from one of its vertices: the
/// remaining vertex directions.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SimplexRef {
    pub others: [u8; 2],
    pub len: u8,
}

impl SimplexRef {
    pub fn others(&self) -> &[u8] {
        &self.others[..self.len as usize]
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Stencil {
    pub offsets: Vec<[i32; 3]>,
    /// For every direction, the pairs and triangles containing it.
    pub incident: Vec<Vec<SimplexRef>>,
    /// Every boundary simplex as a list of directions (singletons excluded).
    pub simplices: Vec<Vec<u8>>,
}

const RING: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

impl Stencil {
    pub fn new(kind: Neighborhood) -> Self {
        let mut offsets: Vec<[i32; 3]> = Vec::new();
        let mut simplices: Vec<Vec<[i32; 3]>> = Vec::new();
        match kind {
            Neighborhood::N4 => {
                let ring: Vec<[i32; 3]> = [(1, 0), (0, 1), (-1, 0), (0, -1)]
                    .iter()
                    .map(|&(x, y)| [x, y, 0])
                    .collect();
                for k in 0..4 {
                    simplices.push(vec![ring[k], ring[(k + 1) % 4]]);
                }
                offsets = ring;
            }
            Neighborhood::N8 => {
                let ring: Vec<[i32; 3]> = RING.iter().map(|&(x, y)| [x, y, 0]).collect();
                for k in 0..8 {
                    simplices.push(vec![ring[k], ring[(k + 1) % 8]]);
                }
                offsets = ring;
            }
            Neighborhood::N6 => {
                for a in 0..3 {
                    for s in [1, -1] {
                        let mut o = [0; 3];
                        o[a] = s;
                        offsets.push(o);
                    }
                }
                for sx in [1, -1] {
                    for sy in [1, -1] {
                        for sz in [1, -1] {
                            let (ex, ey, ez) = ([sx, 0, 0], [0, sy, 0], [0, 0, sz]);
                            simplices.push(vec![ex, ey, ez]);
                        }
                    }
                }
                for a in 0..3 {
                    for b in (a + 1)..3 {
                        for sa in [1, -1] {
                            for sb in [1, -1] {
                                let mut p = [0; 3];
                                let mut q = [0; 3];
                                p[a] = sa;
                                q[b] = sb;
                                simplices.push(vec![p, q]);
                            }
                        }
                    }
                }
            }
            Neighborhood::N26 => {
                for z in -1..=1 {
                    for y in -1..=1 {
                        for x in -1..=1 {
                            if (x, y, z) != (0, 0, 0) {
                                offsets.push([x, y, z]);
                            }
                        }
                    }
                }
                let mut pairs: Vec<Vec<[i32; 3]>> = Vec::new();
                for a in 0..3 {
                    let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                    for s in [1, -1] {
                        let mut center = [0; 3];
                        center[a] = s;
                        let ring: Vec<[i32; 3]> = RING
                            .iter()
                            .map(|&(i, j)| {
                                let mut p = center;
                                p[b] = i;
                                p[c] = j;
                                p
                            })
                            .collect();
                        for k in 0..8 {
                            let (p, q) = (ring[k], ring[(k + 1) % 8]);
                            simplices.push(vec![center, p, q]);
                            pairs.push(vec![center, p]);
                            pairs.push(sorted_pair(p, q));
                        }
                    }
                }
                pairs.sort();
                pairs.dedup();
                simplices.extend(pairs);
            }
        }

        let dir_of = |o: &[i32; 3]| offsets.iter().position(|p| p == o).expect("stencil vertex") as u8;
        let simplices: Vec<Vec<u8>> = simplices.iter().map(|s| s.iter().map(dir_of).collect()).collect();
        let mut incident = vec![Vec::new(); offsets.len()];
        for s in &simplices {
            for (k, &d) in s.iter().enumerate() {
                let mut others = [0u8; 2];
                let mut len = 0;
                for (m, &o) in s.iter().enumerate() {
                    if m != k {
                        others[len] = o;
                        len += 1;
                    }
                }
                incident[d as usize].push(SimplexRef {
                    others,
                    len: len as u8,
                });
            }
        }
        Stencil {
            offsets,
            incident,
            simplices,
        }
    }

    /// Index of the direction opposite to `d`.
    pub fn opposite(&self, d: usize) -> usize {
        let o = self.offsets[d];
        let neg = [-o[0], -o[1], -o[2]];
        self.offsets.iter().position(|p| *p == neg).expect("symmetric stencil")
    }
}

fn sorted_pair(p: [i32; 3], q: [i32; 3]) -> Vec<[i32; 3]> {
    if p <= q {
        vec![p, q]
    } else {
        vec![q, p]
    }
}
