//! Inner and outer capacity bounds for two symmetric users: membership
//! queries, boundary points along a few directions, user diversity and the
//! guaranteed sum throughput.

use memsched::capacity::{
    boundary_sweep, guaranteed_sum_throughput, inner_membership, outer_membership, proximity_gap, DirectionVector,
    RegionModel,
};
use memsched::ChannelParams;

fn main() -> memsched::Result<()> {
    let params = vec![ChannelParams::new(0.2, 0.2)?; 2];
    let region = RegionModel::new(&params)?;
    for (phi, eta) in region.vertices() {
        println!("vertex {phi}: eta = {eta:.5?}");
    }
    for lambda in [[0.30, 0.30], [0.32, 0.32], [0.10, 0.45]] {
        let inner = inner_membership(&lambda, &region)?;
        let outer = outer_membership(&lambda, &params)?;
        println!("{lambda:?}: inner {:?} (scale {:.4}), outer {outer:?}", inner.verdict, inner.scale);
    }

    let dirs: Vec<DirectionVector> =
        [[1.0, 0.0], [2.0, 1.0], [1.0, 1.0]].iter().map(|d| DirectionVector::new(d.to_vec())).collect::<Result<_, _>>()?;
    for row in boundary_sweep(&region, &dirs)? {
        println!("direction {:?}: inner {:.4?} outer {:.4?} gap {:.4}", row.direction, row.inner, row.outer, row.gap);
    }

    let three = vec![params[0]; 3];
    let v = DirectionVector::new(vec![1.0, 2.0, 1.0])?;
    let g = guaranteed_sum_throughput(&v, &three)?;
    println!("v = (1,2,1): diversity {}, guaranteed sum {:.4}, rate {:.4?}", g.diversity, g.sum_throughput, g.rate);
    let diag = DirectionVector::new(vec![1.0, 1.0])?;
    let c2h = g.sum_throughput / 2.0;
    println!("proximity bound on the diagonal: {:.4}", proximity_gap(&diag, &[c2h, c2h], &params)?);
    Ok(())
}
