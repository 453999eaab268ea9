//! Connected-component labelling of binary masks.

use std::collections::VecDeque;

use crate::io::BinaryMask;

#[derive(Debug, PartialEq, Eq, Copy, Clone)]
pub enum Connectivity {
    Four,
    Eight,
}

const OFFSETS_8: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];
const OFFSETS_4: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

impl Connectivity {
    pub(crate) fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &OFFSETS_4,
            Connectivity::Eight => &OFFSETS_8,
        }
    }
}

/// Labels foreground components `1..=count` in row-major order of each
/// component's first pixel; background is 0. Returns `(labels, count)`.
pub fn connected_components(mask: &BinaryMask, conn: Connectivity) -> (Vec<u32>, usize) {
    let (h, w) = mask.dims();
    let mut labels = vec![0u32; h * w];
    let mut next = 0u32;
    let mut queue = VecDeque::new();

    for start in mask.indices() {
        if labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (y, x) = ((i / w) as isize, (i % w) as isize);
            for &(dy, dx) in conn.offsets() {
                let (ny, nx) = (y + dy, x + dx);
                if mask.get_signed(ny, nx) {
                    let j = ny as usize * w + nx as usize;
                    if labels[j] == 0 {
                        labels[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    (labels, next as usize)
}

pub fn count_components(mask: &BinaryMask, conn: Connectivity) -> usize {
    connected_components(mask, conn).1
}
