//! A window of frames as a path graph: node features, edges and the
//! normalized propagation matrix.

use guard_can::graph::{build_graph, normalized_adjacency, write_graph_dump, ByteMode};
use guard_can::ingest::{make_windows, normalize_all};
use guard_can::synth;

fn main() -> guard_can::Result<()> {
    let frames = normalize_all(&synth::desk_normal(1.0, 0)?);
    let window = &make_windows(&frames, 5)?[0];

    for mode in [ByteMode::Binarized, ByteMode::Normalized] {
        let g = build_graph(window, mode)?;
        println!("{mode} node features ({} x {}):", g.num_nodes(), g.node_features.cols());
        for i in 0..g.num_nodes() {
            println!("  {:.3?}", g.node_features.row(i));
        }
    }

    let g = build_graph(window, ByteMode::Binarized)?;
    println!("\nedges: {:?}", g.edges);
    let a = normalized_adjacency(&g);
    println!("normalized adjacency:");
    for i in 0..a.rows() {
        println!("  {:.4?}", a.row(i));
    }

    let (mut nodes, mut edges) = (Vec::new(), Vec::new());
    write_graph_dump(&[g], &mut nodes, &mut edges)?;
    println!("\nedge dump:\n{}", String::from_utf8_lossy(&edges));
    Ok(())
}
