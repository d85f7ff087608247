//! Scratch golden-file generator (deleted before shipping).

use mirkit::reduce::{Embedding, ReduceMethod};
use mirkit::render::{boxplot_stats, render_boxplots, render_trajectory};

fn main() {
    let emb = Embedding {
        method: ReduceMethod::Pca,
        points: vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.5, 0.25],
            vec![2.0, -0.5, 0.5],
            vec![1.5, 1.0, 1.0],
            vec![0.5, 2.0, 0.75],
        ],
        explained_variance: None,
        seed: None,
    };
    let svg = render_trajectory(&emb, 1).unwrap();
    std::fs::write("/tmp/trajectory5.svg", &svg).unwrap();
    println!("{svg}");

    let groups = vec![
        (
            "1960s".to_string(),
            boxplot_stats(&[150.0, 160.0, 170.0, 175.0, 180.0, 200.0]).unwrap(),
        ),
        (
            "1990s".to_string(),
            boxplot_stats(&[210.0, 230.0, 250.0, 260.0, 280.0, 410.0]).unwrap(),
        ),
    ];
    let box_svg = render_boxplots(&groups).unwrap();
    std::fs::write("/tmp/boxplots.svg", &box_svg).unwrap();
    println!("---\n{box_svg}");
}
