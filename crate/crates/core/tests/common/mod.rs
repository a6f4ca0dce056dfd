//! Independent oracles and fixture builders shared by the integration and
//! acceptance tests.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};

use chart2mermaid::imaging::{PixelLayout, RasterImage};

pub const FIG2: &str = include_str!("../fixtures/fig2.mmd");

/// Ground truth for the five-flowchart mock dataset.
pub fn truths() -> Vec<(&'static str, String)> {
    vec![
        ("fig2", FIG2.to_string()),
        (
            "linear",
            "flowchart TD\n    A[Start] --> B[Read input] --> C[Process] --> D[End]\n".into(),
        ),
        (
            "decision",
            "flowchart TD\n    A([Begin]) --> B{Valid?}\n    B -- Yes --> C[Save]\n    B -- No --> D[Reject]\n    C --> E([Done])\n    D --> E\n".into(),
        ),
        (
            "loop",
            "flowchart LR\n    S[Start] --> L{More items?}\n    L -->|yes| P[Handle item]\n    P --> L\n    L -->|no| X[Stop]\n".into(),
        ),
        (
            "retry",
            "graph TD\n    A[Init] --> B[Load A]\n    A --> C[Load B]\n    B --> D[Merge]\n    C --> D\n    D --> E{OK?}\n    E -- Y --> F[Report]\n    E -- N --> G[Reset]\n    G --> B\n".into(),
        ),
    ]
}

pub fn fenced(code: &str) -> String {
    format!("Here is the diagram.\n\n```mermaid\n{}\n```\n", code.trim_end())
}

/// White canvas with outlined boxes joined by lines, seeded so each
/// flowchart gets a different layout.
pub fn synthetic_flowchart(seed: u32) -> RasterImage {
    let (w, h) = (160 + seed * 8, 200 + seed * 4);
    let boxes: Vec<(u32, u32, u32, u32)> = (0..4)
        .map(|i| {
            let x0 = 20 + (i * 13 + seed * 7) % 60;
            let y0 = 10 + i * 45;
            (x0, y0, x0 + 60, y0 + 24)
        })
        .collect();
    RasterImage::from_fn(w, h, PixelLayout::Rgb8, |x, y| {
        let on_box = boxes.iter().any(|&(x0, y0, x1, y1)| {
            let inside = x >= x0 && x <= x1 && y >= y0 && y <= y1;
            let border = x == x0 || x == x1 || y == y0 || y == y1 || x == x0 + 1 || y == y0 + 1;
            inside && border
        });
        let on_line = boxes.windows(2).any(|p| {
            let cx = (p[0].0 + p[0].2) / 2;
            (cx..=cx + 1).contains(&x) && y > p[0].3 && y < p[1].1
        });
        if on_box || on_line {
            vec![20, 20, 40]
        } else {
            vec![250, 250, 250]
        }
    })
    .unwrap()
}

/// A flat grey image with one dark vertical bar at columns 30..34.
pub fn bar_image() -> RasterImage {
    RasterImage::from_fn(64, 64, PixelLayout::Gray8, |x, _| {
        if (30..34).contains(&x) {
            vec![20]
        } else {
            vec![220]
        }
    })
    .unwrap()
}

pub struct Dataset {
    pub root: PathBuf,
    pub manifest: PathBuf,
    pub fixtures: PathBuf,
    pub ids: Vec<String>,
}

/// Writes images, truths, a JSON manifest and mock replies equal to the
/// truth for both conditions and runs `1..=runs`.
pub fn build_dataset(root: &Path, runs: u32) -> Dataset {
    let data = root.join("data");
    let fixtures = root.join("fixtures");
    fs::create_dir_all(&data).unwrap();
    let mut entries = Vec::new();
    let mut ids = Vec::new();
    for (i, (id, truth)) in truths().into_iter().enumerate() {
        synthetic_flowchart(i as u32).save_png(data.join(format!("{id}.png"))).unwrap();
        fs::write(data.join(format!("{id}.mmd")), &truth).unwrap();
        entries.push(serde_json::json!({
            "id": id,
            "image_path": format!("{id}.png"),
            "truth_path": format!("{id}.mmd"),
        }));
        for cond in ["baseline", "edgeflow"] {
            let d = fixtures.join(id).join(cond);
            fs::create_dir_all(&d).unwrap();
            for k in 1..=runs {
                fs::write(d.join(format!("run{k}.txt")), fenced(&truth)).unwrap();
            }
        }
        ids.push(id.to_string());
    }
    let manifest = data.join("manifest.json");
    fs::write(
        &manifest,
        serde_json::to_string_pretty(&serde_json::json!({ "entries": entries })).unwrap(),
    )
    .unwrap();
    Dataset {
        root: root.to_path_buf(),
        manifest,
        fixtures,
        ids,
    }
}

// ---------------------------------------------------------------------------
// Reference Canny: direct 2-D convolutions and angle-based suppression.

fn binomial(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

fn convolve2d(src: &[f64], w: usize, h: usize, k: &[Vec<f64>]) -> Vec<f64> {
    let r = (k.len() / 2) as isize;
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (ky, row) in k.iter().enumerate() {
                for (kx, &c) in row.iter().enumerate() {
                    let sx = (x + kx as isize - r).clamp(0, w as isize - 1) as usize;
                    let sy = (y + ky as isize - r).clamp(0, h as isize - 1) as usize;
                    acc += c * src[sy * w + sx];
                }
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    out
}

/// Returns a 0/255 edge buffer.
pub fn reference_canny(img: &RasterImage, low: f64, high: f64, aperture: usize) -> Vec<u8> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let luma: Vec<f64> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            let p = img.pixel(x as u32, y as u32);
            if p.len() >= 3 {
                0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
            } else {
                p[0] as f64
            }
        })
        .collect();
    let sigma = 1.4 * aperture as f64 / 3.0;
    let radius = aperture as isize - 1;
    let mut g: Vec<Vec<f64>> = (-radius..=radius)
        .map(|y| {
            (-radius..=radius)
                .map(|x| (-((x * x + y * y) as f64) / (2.0 * sigma * sigma)).exp())
                .collect()
        })
        .collect();
    let total: f64 = g.iter().flatten().sum();
    g.iter_mut().flatten().for_each(|v| *v /= total);
    let smooth = convolve2d(&luma, w, h, &g);

    let s = binomial(aperture - 1);
    let b = binomial(aperture - 2);
    let mut d = vec![0.0; aperture];
    for (i, v) in b.iter().enumerate() {
        d[i] -= v;
        d[i + 1] += v;
    }
    let kx: Vec<Vec<f64>> = s.iter().map(|sy| d.iter().map(|dx| sy * dx).collect()).collect();
    let ky: Vec<Vec<f64>> = d.iter().map(|dy| s.iter().map(|sx| dy * sx).collect()).collect();
    let gx = convolve2d(&smooth, w, h, &kx);
    let gy = convolve2d(&smooth, w, h, &ky);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();

    let mut thin = vec![0.0; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let angle = gy[i].atan2(gx[i]).to_degrees().rem_euclid(180.0);
            let (dx, dy): (isize, isize) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let at = |ox: isize, oy: isize| mag[(y as isize + oy) as usize * w + (x as isize + ox) as usize];
            if m >= at(dx, dy) && m >= at(-dx, -dy) {
                thin[i] = m;
            }
        }
    }
    let mut out = vec![0u8; w * h];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m >= high {
            out[i] = 255;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for oy in -1..=1 {
            for ox in -1..=1 {
                let (nx, ny) = (x + ox, y + oy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if out[j] == 0 && thin[j] >= low {
                    out[j] = 255;
                    queue.push_back(j);
                }
            }
        }
    }
    out
}

/// Every edge pixel in `a` has an edge pixel of `b` within Chebyshev
/// distance `tol`.
pub fn covered(a: &[u8], b: &[u8], w: usize, h: usize, tol: isize) -> bool {
    (0..w * h).filter(|&i| a[i] != 0).all(|i| {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        (-tol..=tol).any(|oy| {
            (-tol..=tol).any(|ox| {
                let (nx, ny) = (x + ox, y + oy);
                nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize && b[ny as usize * w + nx as usize] != 0
            })
        })
    })
}

// ---------------------------------------------------------------------------
// Path oracles.

/// All simple paths from in-degree-0 nodes to out-degree-0 nodes, as index
/// sequences, by exhaustive recursion.
pub fn brute_force_simple_paths(n: usize, arcs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    let mut indeg = vec![0; n];
    for &(a, b) in arcs {
        if !adj[a].contains(&b) {
            adj[a].push(b);
            indeg[b] += 1;
        }
    }
    fn go(adj: &[Vec<usize>], path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if adj[last].is_empty() {
            out.push(path.clone());
            return;
        }
        for &next in &adj[last] {
            if !path.contains(&next) {
                path.push(next);
                go(adj, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for s in (0..n).filter(|&i| indeg[i] == 0) {
        go(&adj, &mut vec![s], &mut out);
    }
    out.sort();
    out.dedup();
    out
}

/// Entry-to-terminal walks visiting no node more than `cap` times, grown
/// breadth-first from every in-degree-0 node.
pub fn brute_force_capped_walks(n: usize, arcs: &[(usize, usize)], cap: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    let mut indeg = vec![0; n];
    for &(a, b) in arcs {
        if !adj[a].contains(&b) {
            adj[a].push(b);
            indeg[b] += 1;
        }
    }
    let mut queue: VecDeque<Vec<usize>> = (0..n).filter(|&i| indeg[i] == 0).map(|i| vec![i]).collect();
    let mut out = Vec::new();
    while let Some(walk) = queue.pop_front() {
        let last = *walk.last().unwrap();
        if adj[last].is_empty() {
            out.push(walk);
            continue;
        }
        for &next in &adj[last] {
            if walk.iter().filter(|&&v| v == next).count() < cap {
                let mut w = walk.clone();
                w.push(next);
                queue.push_back(w);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

// ---------------------------------------------------------------------------
// Matching oracle: maximum bipartite matching by augmenting paths.

pub fn max_matching<T: PartialEq>(pred: &[T], truth: &[T]) -> usize {
    fn augment(
        u: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none() || augment(owner[v].unwrap(), adj, seen, owner) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let adj: Vec<Vec<usize>> = pred
        .iter()
        .map(|p| (0..truth.len()).filter(|&j| truth[j] == *p).collect())
        .collect();
    let mut owner = vec![None; truth.len()];
    let mut total = 0;
    for u in 0..pred.len() {
        let mut seen = vec![false; truth.len()];
        if augment(u, &adj, &mut seen, &mut owner) {
            total += 1;
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Statistics oracles.

/// P(W+ >= w) by listing all 2^n sign vectors.
pub fn enumerate_upper_tail(ranks: &[f64], w: f64) -> f64 {
    let n = ranks.len();
    let hits = (0u64..1 << n)
        .filter(|mask| {
            let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            s >= w - 1e-9
        })
        .count();
    hits as f64 / (1u64 << n) as f64
}

/// Cliff's delta over all cross pairs, counted directly.
pub fn brute_delta(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0i64;
    for x in a {
        for y in b {
            s += match x.partial_cmp(y).unwrap() {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => 0,
            };
        }
    }
    s as f64 / (a.len() * b.len()) as f64
}

/// Mid-ranks by counting, independent of any sort.
pub fn count_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let less = values.iter().filter(|x| *x < v).count() as f64;
            let equal = values.iter().filter(|x| *x == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn label_counts(xs: &[String]) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for x in xs {
        *m.entry(x.as_str()).or_insert(0) += 1;
    }
    m
}
