//! Vessel centerlines: thinning, junction removal and segment labelling.
//!
//! Thinning is Zhang–Suen with 8-connectivity and the Lü–Wang neighbour
//! bound (3..=6 instead of 2..=6). Its raw output keeps redundant
//! "staircase" corner pixels on diagonal runs, which would read as false
//! junctions (three skeleton neighbours), so each Zhang–Suen sweep is
//! followed by a sequential pass that deletes simple corner pixels. Both
//! passes repeat until neither changes the mask. Zhang–Suen erases 2x2
//! squares entirely; any input component left without skeleton pixels gets
//! one pixel back so component counts are preserved.

use crate::components::{connected_components, Connectivity};
use crate::error::{Error, Result};
use crate::io::BinaryMask;

/// Ring offsets (dy, dx) clockwise from north: P2..P9 in Zhang–Suen notation.
const RING: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

fn ring(mask: &BinaryMask, y: usize, x: usize) -> [bool; 8] {
    let (y, x) = (y as isize, x as isize);
    let mut p = [false; 8];
    for (k, &(dy, dx)) in RING.iter().enumerate() {
        p[k] = mask.get_signed(y + dy, x + dx);
    }
    p
}

fn neighbor_count(mask: &BinaryMask, y: usize, x: usize) -> usize {
    ring(mask, y, x).iter().filter(|&&v| v).count()
}

/// One Zhang–Suen subiteration. Returns whether any pixel was removed.
fn zhang_suen_step(mask: &mut BinaryMask, first: bool) -> bool {
    let (h, w) = mask.dims();
    let mut doomed = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(y, x) {
                continue;
            }
            let p = ring(mask, y, x);
            let b = p.iter().filter(|&&v| v).count();
            // Lü–Wang lower bound of 3 keeps 2-pixel-thick diagonals from eroding away
            if !(3..=6).contains(&b) {
                continue;
            }
            let a = (0..8).filter(|&k| !p[k] && p[(k + 1) % 8]).count();
            if a != 1 {
                continue;
            }
            // p[0]=N (P2), p[2]=E (P4), p[4]=S (P6), p[6]=W (P8)
            let (c1, c2) = if first {
                (p[0] && p[2] && p[4], p[2] && p[4] && p[6])
            } else {
                (p[0] && p[2] && p[6], p[0] && p[4] && p[6])
            };
            if !c1 && !c2 {
                doomed.push((y, x));
            }
        }
    }
    for &(y, x) in &doomed {
        mask.set(y, x, false);
    }
    !doomed.is_empty()
}

/// Foreground ring pixels form exactly one 8-connected group and at least
/// one 4-neighbour is background: deleting the centre changes no topology.
fn is_simple(p: &[bool; 8]) -> bool {
    !(p[0] && p[2] && p[4] && p[6]) && ring_groups(p) == 1
}

/// Number of 8-connected groups among the foreground ring pixels.
fn ring_groups(p: &[bool; 8]) -> usize {
    let mut seen = [false; 8];
    let mut groups = 0;
    for start in 0..8 {
        if !p[start] || seen[start] {
            continue;
        }
        groups += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            let (ky, kx) = RING[k];
            for j in 0..8 {
                let (jy, jx) = RING[j];
                if p[j] && !seen[j] && (ky - jy).abs() <= 1 && (kx - jx).abs() <= 1 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    groups
}

/// Sequential raster pass removing simple pixels that sit in the corner of an
/// L formed by two 4-neighbours (N-E, E-S, S-W or W-N).
fn remove_staircase_corners(mask: &mut BinaryMask) -> bool {
    let (h, w) = mask.dims();
    let mut changed = false;
    for y in 0..h {
        for x in 0..w {
            if !mask.get(y, x) {
                continue;
            }
            let p = ring(mask, y, x);
            let corner = (p[0] && p[2]) || (p[2] && p[4]) || (p[4] && p[6]) || (p[6] && p[0]);
            if corner && is_simple(&p) {
                mask.set(y, x, false);
                changed = true;
            }
        }
    }
    changed
}

/// Breaks every solid 2x2 block by deleting one of its pixels, preferring one
/// whose neighbours stay connected without it (a one-pixel hole is allowed).
/// When every pixel of the block carries its own branch the first one goes
/// anyway, splitting the skeleton locally.
fn break_solid_blocks(mask: &mut BinaryMask) -> bool {
    let (h, w) = mask.dims();
    let mut changed = false;
    for y in 0..h.saturating_sub(1) {
        for x in 0..w.saturating_sub(1) {
            let block = [(y, x), (y, x + 1), (y + 1, x), (y + 1, x + 1)];
            if !block.iter().all(|&(by, bx)| mask.get(by, bx)) {
                continue;
            }
            let (vy, vx) = block
                .iter()
                .copied()
                .find(|&(by, bx)| ring_groups(&ring(mask, by, bx)) == 1)
                .unwrap_or(block[0]);
            mask.set(vy, vx, false);
            changed = true;
        }
    }
    changed
}

/// Thins a binary mask to a one-pixel-wide, 8-connected skeleton.
pub fn skeletonize(mask: &BinaryMask) -> BinaryMask {
    let mut skel = mask.clone();
    loop {
        let mut changed = false;
        loop {
            let a = zhang_suen_step(&mut skel, true);
            let b = zhang_suen_step(&mut skel, false);
            if !(a || b) {
                break;
            }
            changed = true;
        }
        changed |= remove_staircase_corners(&mut skel);
        changed |= break_solid_blocks(&mut skel);
        if !changed {
            break;
        }
    }
    restore_vanished_components(mask, &mut skel);
    skel
}

/// Puts back one pixel, the one nearest the centroid, for every component of
/// `mask` that lost all of its pixels during thinning.
fn restore_vanished_components(mask: &BinaryMask, skel: &mut BinaryMask) {
    let (labels, n) = connected_components(mask, Connectivity::Eight);
    if n == 0 {
        return;
    }
    let w = mask.width();
    let mut has_skeleton = vec![false; n + 1];
    for i in skel.indices() {
        has_skeleton[labels[i] as usize] = true;
    }
    if has_skeleton[1..].iter().all(|&v| v) {
        return;
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for (i, &l) in labels.iter().enumerate() {
        if l != 0 && !has_skeleton[l as usize] {
            members[l as usize].push(i);
        }
    }
    for pixels in members.iter().filter(|m| !m.is_empty()) {
        let len = pixels.len() as f64;
        let cy = pixels.iter().map(|&i| (i / w) as f64).sum::<f64>() / len;
        let cx = pixels.iter().map(|&i| (i % w) as f64).sum::<f64>() / len;
        let dist = |i: usize| {
            let dy = (i / w) as f64 - cy;
            let dx = (i % w) as f64 - cx;
            dy * dy + dx * dx
        };
        // pixels are in row-major order and min_by keeps the first minimum
        let best = pixels
            .iter()
            .copied()
            .min_by(|&a, &b| dist(a).total_cmp(&dist(b)))
            .expect("non-empty component");
        skel.set(best / w, best % w, true);
    }
}

/// Skeleton pixels with three or more skeleton neighbours.
pub fn find_junctions(skeleton: &BinaryMask) -> BinaryMask {
    let (h, w) = skeleton.dims();
    BinaryMask::from_fn(h, w, |y, x| {
        skeleton.get(y, x) && neighbor_count(skeleton, y, x) >= 3
    })
}

/// Junction-free skeleton segments labelled `1..=count` (0 is background).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSegments {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    count: usize,
}

impl LabeledSegments {
    /// Builds from a raw label field, compacting labels to `1..=N` in
    /// row-major order of first appearance.
    pub fn from_labels(height: usize, width: usize, raw: &[u32]) -> Result<Self> {
        if raw.len() != height * width {
            return Err(Error::Format(format!(
                "label field has {} entries for {height}x{width}",
                raw.len()
            )));
        }
        let mut remap = std::collections::HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &l in raw {
            if l == 0 {
                labels.push(0);
                continue;
            }
            let next = remap.len() as u32 + 1;
            labels.push(*remap.entry(l).or_insert(next));
        }
        Ok(Self {
            height,
            width,
            count: remap.len(),
            labels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_at(&self, y: usize, x: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn segment_count(&self) -> usize {
        self.count
    }

    /// Pixel count per segment; entry `k` is segment `k + 1`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &l in &self.labels {
            if l != 0 {
                sizes[l as usize - 1] += 1;
            }
        }
        sizes
    }

    /// Flat pixel indices per segment; entry `k` is segment `k + 1`.
    pub fn pixel_lists(&self) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); self.count];
        for (i, &l) in self.labels.iter().enumerate() {
            if l != 0 {
                lists[l as usize - 1].push(i);
            }
        }
        lists
    }

    pub fn to_mask(&self) -> BinaryMask {
        BinaryMask::new(
            self.height,
            self.width,
            self.labels.iter().map(|&l| l != 0).collect(),
        )
        .expect("dims match")
    }
}

/// Removes junctions (and pixels they leave isolated) and labels what
/// remains by 8-connected component.
pub fn label_segments(skeleton: &BinaryMask) -> LabeledSegments {
    let (h, w) = skeleton.dims();
    let junctions = find_junctions(skeleton);
    let pruned = BinaryMask::from_fn(h, w, |y, x| skeleton.get(y, x) && !junctions.get(y, x));
    let kept = BinaryMask::from_fn(h, w, |y, x| {
        pruned.get(y, x) && neighbor_count(&pruned, y, x) > 0
    });
    let (labels, count) = connected_components(&kept, Connectivity::Eight);
    LabeledSegments {
        height: h,
        width: w,
        labels,
        count,
    }
}

/// Drops segments with fewer than `min_len` pixels and re-compacts labels.
pub fn prune_short_segments(segs: &LabeledSegments, min_len: usize) -> Result<LabeledSegments> {
    if min_len < 1 {
        return Err(Error::InvalidParameter("min_len must be >= 1".into()));
    }
    let sizes = segs.sizes();
    let raw: Vec<u32> = segs
        .labels
        .iter()
        .map(|&l| {
            if l != 0 && sizes[l as usize - 1] >= min_len {
                l
            } else {
                0
            }
        })
        .collect();
    LabeledSegments::from_labels(segs.height, segs.width, &raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::count_components;

    pub(crate) fn mask(rows: &[&str]) -> BinaryMask {
        BinaryMask::from_fn(rows.len(), rows[0].len(), |y, x| {
            rows[y].as_bytes()[x] == b'#'
        })
    }

    /// Textbook Zhang–Suen written against plain `Vec<Vec<u8>>` grids,
    /// independent of the library's mask type and ring helpers. `min_b` is 2
    /// for the original rule and 3 for the Lü–Wang variant.
    fn zhang_suen_oracle(grid: &[Vec<u8>], min_b: u8) -> Vec<Vec<u8>> {
        let h = grid.len();
        let w = grid[0].len();
        let mut img = grid.to_vec();
        let at = |img: &Vec<Vec<u8>>, y: isize, x: isize| -> u8 {
            if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
                0
            } else {
                img[y as usize][x as usize]
            }
        };
        loop {
            let mut changed = false;
            for step in 0..2 {
                let mut marks = Vec::new();
                for y in 0..h as isize {
                    for x in 0..w as isize {
                        if at(&img, y, x) == 0 {
                            continue;
                        }
                        let p2 = at(&img, y - 1, x);
                        let p3 = at(&img, y - 1, x + 1);
                        let p4 = at(&img, y, x + 1);
                        let p5 = at(&img, y + 1, x + 1);
                        let p6 = at(&img, y + 1, x);
                        let p7 = at(&img, y + 1, x - 1);
                        let p8 = at(&img, y, x - 1);
                        let p9 = at(&img, y - 1, x - 1);
                        let seq = [p2, p3, p4, p5, p6, p7, p8, p9, p2];
                        let b: u8 = seq[..8].iter().sum();
                        let a = seq.windows(2).filter(|w| w[0] == 0 && w[1] == 1).count();
                        let ok = if step == 0 {
                            p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
                        } else {
                            p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
                        };
                        if (min_b..=6).contains(&b) && a == 1 && ok {
                            marks.push((y as usize, x as usize));
                        }
                    }
                }
                for (y, x) in &marks {
                    img[*y][*x] = 0;
                }
                changed |= !marks.is_empty();
            }
            if !changed {
                return img;
            }
        }
    }

    #[test]
    fn empty_and_single_pixel() {
        let empty = BinaryMask::empty(5, 5);
        assert_eq!(skeletonize(&empty), empty);
        let dot = mask(&[".....", "..#..", "....."]);
        assert_eq!(skeletonize(&dot), dot);
    }

    #[test]
    fn bar_matches_reference_thinning() {
        let rows = [
            "............",
            ".##########.",
            ".##########.",
            ".##########.",
            "............",
        ];
        let m = mask(&rows);
        let grid: Vec<Vec<u8>> = rows
            .iter()
            .map(|r| r.bytes().map(|b| (b == b'#') as u8).collect())
            .collect();
        let oracle = zhang_suen_oracle(&grid, 3);
        let textbook = zhang_suen_oracle(&grid, 2);
        let skel = skeletonize(&m);
        for y in 0..5 {
            for x in 0..12 {
                assert_eq!(skel.get(y, x), oracle[y][x] == 1, "pixel ({y},{x})");
                if textbook[y][x] == 1 {
                    assert!(skel.get(y, x), "textbook pixel ({y},{x}) missing");
                }
            }
        }
        // a horizontal line through the middle row
        assert!(skel.indices().all(|i| i / 12 == 2));
        assert!(skel.count() >= 8, "{}", skel.count());
    }

    #[test]
    fn two_by_two_square_keeps_a_pixel() {
        let m = mask(&["....", ".##.", ".##.", "...."]);
        let skel = skeletonize(&m);
        assert_eq!(skel.count(), 1);
        assert_eq!(skeletonize(&skel), skel);
    }

    fn has_solid_block(m: &BinaryMask) -> bool {
        let (h, w) = m.dims();
        (0..h - 1).any(|y| {
            (0..w - 1)
                .any(|x| m.get(y, x) && m.get(y + 1, x) && m.get(y, x + 1) && m.get(y + 1, x + 1))
        })
    }

    #[test]
    fn block_holding_branches_is_opened() {
        let m = mask(&[
            ".....#..#.....",
            "......##.#....",
            "......###.....",
            ".....#.#......",
            "........#.....",
        ]);
        let s = skeletonize(&m);
        assert!(!has_solid_block(&s));
        assert_eq!(
            count_components(&s, Connectivity::Eight),
            count_components(&m, Connectivity::Eight)
        );
        assert_eq!(skeletonize(&s), s);
    }

    #[test]
    fn x_with_solid_core_loses_its_block() {
        let m = mask(&[
            "#......#", ".#....#.", "..#..#..", "...##...", "...##...", "..#..#..", ".#....#.",
            "#......#",
        ]);
        let s = skeletonize(&m);
        assert!(!has_solid_block(&s));
        assert!(s.indices().all(|i| m.data()[i]));
        assert_eq!(skeletonize(&s), s);
    }

    #[test]
    fn staircase_has_no_false_junctions() {
        // a 2-wide diagonal band
        let m = BinaryMask::from_fn(20, 20, |y, x| x == y || x == y + 1);
        let skel = skeletonize(&m);
        assert!(find_junctions(&skel).is_blank());
        assert_eq!(label_segments(&skel).segment_count(), 1);
    }

    #[test]
    fn junctions_of_simple_shapes() {
        let line = mask(&[".......", ".#####.", "......."]);
        assert!(find_junctions(&line).is_blank());

        // diagonal cross: only the centre has >= 3 neighbours
        let cross = mask(&[
            "#.....#", ".#...#.", "..#.#..", "...#...", "..#.#..", ".#...#.", "#.....#",
        ]);
        let j = find_junctions(&cross);
        assert_eq!(j.indices().collect::<Vec<_>>(), vec![3 * 7 + 3]);

        // upright plus: under 8-connectivity the four pixels touching the
        // centre also see three skeleton neighbours
        let plus = mask(&[
            "...#...", "...#...", "...#...", "#######", "...#...", "...#...", "...#...",
        ]);
        let j = find_junctions(&plus);
        assert_eq!(j.indices().collect::<Vec<_>>(), vec![17, 23, 24, 25, 31]);
    }

    #[test]
    fn y_shape_junction_matches_brute_force() {
        let y = mask(&[
            "#.....#", ".#...#.", "..#.#..", "...#...", "...#...", "...#...", "...#...",
        ]);
        let (h, w) = y.dims();
        let mut brute = Vec::new();
        for yy in 0..h as isize {
            for xx in 0..w as isize {
                if !y.get_signed(yy, xx) {
                    continue;
                }
                let mut n = 0;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if (dy, dx) != (0, 0) && y.get_signed(yy + dy, xx + dx) {
                            n += 1;
                        }
                    }
                }
                if n >= 3 {
                    brute.push(yy as usize * w + xx as usize);
                }
            }
        }
        assert_eq!(brute, vec![3 * 7 + 3]);
        assert_eq!(find_junctions(&y).indices().collect::<Vec<_>>(), brute);
    }

    #[test]
    fn diagonal_cross_has_four_arms() {
        let cross = mask(&[
            "#.....#", ".#...#.", "..#.#..", "...#...", "..#.#..", ".#...#.", "#.....#",
        ]);
        // brute force: drop the centre, count 8-connected groups
        let mut without = cross.clone();
        without.set(3, 3, false);
        let (_, n) = connected_components(&without, Connectivity::Eight);
        assert_eq!(n, 4);
        let segs = label_segments(&cross);
        assert_eq!(segs.segment_count(), 4);
        assert_eq!(segs.sizes(), vec![3, 3, 3, 3]);
    }

    #[test]
    fn plus_sign_has_four_arms() {
        let plus = mask(&[
            "...#...", "...#...", "...#...", "#######", "...#...", "...#...", "...#...",
        ]);
        assert_eq!(skeletonize(&plus), plus);
        let segs = label_segments(&plus);
        // brute force: drop every junction pixel, count 8-connected groups
        let mut without = plus.clone();
        for i in find_junctions(&plus).indices() {
            without.set(i / 7, i % 7, false);
        }
        let (_, n) = connected_components(&without, Connectivity::Eight);
        assert_eq!(n, 4);
        assert_eq!(segs.segment_count(), 4);
        assert_eq!(segs.sizes(), vec![2, 2, 2, 2]);
        // row-major first-pixel order: top arm, left arm, right arm, bottom arm
        assert_eq!(segs.label_at(0, 3), 1);
        assert_eq!(segs.label_at(3, 0), 2);
        assert_eq!(segs.label_at(3, 6), 3);
        assert_eq!(segs.label_at(6, 3), 4);
    }

    #[test]
    fn line_and_empty_segments() {
        let line = mask(&[".......", ".#####.", "......."]);
        assert_eq!(label_segments(&line).segment_count(), 1);
        assert_eq!(label_segments(&BinaryMask::empty(3, 3)).segment_count(), 0);
    }

    #[test]
    fn isolated_pixels_after_junction_removal_are_dropped() {
        // the centre of this star is a junction; each arm is a single pixel
        let star = mask(&["#.#", ".#.", "#.#"]);
        assert_eq!(label_segments(&star).segment_count(), 0);
    }

    #[test]
    fn prune_thresholds() {
        let m = mask(&["###.......", "..........", "##########"]);
        let segs = label_segments(&m);
        assert_eq!(segs.sizes(), vec![3, 10]);
        let same = prune_short_segments(&segs, 1).unwrap();
        assert_eq!(same, segs);
        let pruned = prune_short_segments(&segs, 5).unwrap();
        assert_eq!(pruned.segment_count(), 1);
        assert_eq!(pruned.label_at(2, 0), 1);
        assert_eq!(pruned.label_at(0, 0), 0);
        assert!(prune_short_segments(&segs, 0).is_err());
    }
}
