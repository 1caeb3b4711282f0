// Vertex classes, Cartesian images and the three outgoing edges.

use hexwalk::lattice::{neighbors, parity, to_cartesian};
use hexwalk::{LatticeVertex, VertexClass};

pub fn run_example() {
    let a = 1.0;
    for class in [VertexClass::from_index(0), VertexClass::from_index(1)] {
        let v = LatticeVertex::new(0, 0, class);
        let here = to_cartesian(&v, a).unwrap();
        println!("class {} vertex at ({:.3}, {:.3})", class.index(), here.x, here.y);
        for (w, r) in neighbors(&v) {
            let p = to_cartesian(&w, a).unwrap();
            println!("  edge {r} -> ({}, {}) class {}, length {:.6}", w.j, w.k, w.class.index(), here.distance(&p));
        }
    }
    // the class after n steps depends only on the parity of n
    for n in 0..4 {
        println!("after {n} steps: class {}", parity(n).index());
    }
}

#[allow(dead_code)]
fn main() {
    run_example()
}
