//! Prints a greedy partition of the `N`-subdomain domain as a character map
//! (one character per 3x3 block of cells, subdomain index in base 36).
//!
//! `cargo run --release --example show_partition -- 8 [seed]`

use soras::decomposition::partition_greedy;
use soras::mesh::Mesh;

fn main() -> soras::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);
    let res = 60;
    let mesh = Mesh::rectangle(0.2 * n as f64, 0.2, res * n, res)?;
    let own = partition_greedy(&mesh, n, seed)?;
    let step = 3;
    for row in (0..res).step_by(step).rev() {
        let line: String = (0..res * n)
            .step_by(step)
            .map(|col| char::from_digit((own[2 * (row * res * n + col)] % 36) as u32, 36).unwrap_or('?'))
            .collect();
        println!("{line}");
    }
    Ok(())
}
