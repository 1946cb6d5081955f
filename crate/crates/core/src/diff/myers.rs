//! Linear-space Myers diff (middle-snake bisection).

use std::ops::Range;

#[derive(Clone, Copy)]
struct Point {
    x: usize,
    y: usize,
}

struct Boxed {
    left: usize,
    top: usize,
    right: usize,
    bottom: usize,
}

impl Boxed {
    fn width(&self) -> isize {
        (self.right - self.left) as isize
    }

    fn height(&self) -> isize {
        (self.bottom - self.top) as isize
    }

    fn delta(&self) -> isize {
        self.width() - self.height()
    }
}

/// Edit operations as `(a_range, b_range, is_equal)`, in order, tiling both
/// inputs. Adjacent operations of the same kind are not merged.
pub(super) fn diff_ops<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(Range<usize>, Range<usize>, bool)> {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let suffix = a[prefix..]
        .iter()
        .rev()
        .zip(b[prefix..].iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (a_end, b_end) = (a.len() - suffix, b.len() - suffix);

    let mut ops = Vec::new();
    if prefix > 0 {
        ops.push((0..prefix, 0..prefix, true));
    }
    let mut path = vec![Point { x: prefix, y: prefix }];
    find_path(a, b, Boxed { left: prefix, top: prefix, right: a_end, bottom: b_end }, &mut path);
    path.push(Point { x: a_end, y: b_end });
    for w in path.windows(2) {
        walk(a, b, w[0], w[1], &mut ops);
    }
    if suffix > 0 {
        ops.push((a_end..a.len(), b_end..b.len(), true));
    }
    ops
}

fn walk<T: PartialEq>(a: &[T], b: &[T], from: Point, to: Point, ops: &mut Vec<(Range<usize>, Range<usize>, bool)>) {
    let (mut x, mut y) = (from.x, from.y);
    let diagonal = |x: &mut usize, y: &mut usize, ops: &mut Vec<_>| {
        let (sx, sy) = (*x, *y);
        while *x < to.x && *y < to.y && a[*x] == b[*y] {
            *x += 1;
            *y += 1;
        }
        if *x > sx {
            ops.push((sx..*x, sy..*y, true));
        }
    };
    diagonal(&mut x, &mut y, ops);
    let (dx, dy) = (to.x - x, to.y - y);
    if dx < dy {
        ops.push((x..x, y..y + 1, false));
        y += 1;
    } else if dx > dy {
        ops.push((x..x + 1, y..y, false));
        x += 1;
    }
    diagonal(&mut x, &mut y, ops);
}

/// Appends the interior points of a shortest path through `bx`.
fn find_path<T: PartialEq>(a: &[T], b: &[T], bx: Boxed, path: &mut Vec<Point>) {
    let Some((start, finish)) = midpair(a, b, &bx) else { return };
    let head_trivial = start.x == bx.left && start.y == bx.top;
    let tail_trivial = finish.x == bx.right && finish.y == bx.bottom;
    find_path(a, b, Boxed { left: bx.left, top: bx.top, right: start.x, bottom: start.y }, path);
    if !head_trivial {
        path.push(start);
    }
    if !tail_trivial {
        path.push(finish);
    }
    find_path(a, b, Boxed { left: finish.x, top: finish.y, right: bx.right, bottom: bx.bottom }, path);
}

fn midpair<T: PartialEq>(a: &[T], b: &[T], bx: &Boxed) -> Option<(Point, Point)> {
    let size = bx.width() + bx.height();
    if size == 0 {
        return None;
    }
    let max = (size + 1) / 2;
    let offset = max + 1;
    let mut vf = vec![0isize; (2 * max + 3) as usize];
    let mut vb = vec![0isize; (2 * max + 3) as usize];
    vf[(1 + offset) as usize] = bx.left as isize;
    vb[(1 + offset) as usize] = bx.bottom as isize;
    for d in 0..=max {
        if let Some(s) = forward(a, b, bx, &mut vf, &vb, d, offset) {
            return Some(s);
        }
        if let Some(s) = backward(a, b, bx, &vf, &mut vb, d, offset) {
            return Some(s);
        }
    }
    None
}

fn forward<T: PartialEq>(a: &[T], b: &[T], bx: &Boxed, vf: &mut [isize], vb: &[isize], d: isize, off: isize) -> Option<(Point, Point)> {
    let at = |k: isize| (k + off) as usize;
    let mut k = d;
    while k >= -d {
        let c = k - bx.delta();
        let (px, mut x);
        if k == -d || (k != d && vf[at(k - 1)] < vf[at(k + 1)]) {
            px = vf[at(k + 1)];
            x = px;
        } else {
            px = vf[at(k - 1)];
            x = px + 1;
        }
        let mut y = bx.top as isize + (x - bx.left as isize) - k;
        let py = if d == 0 || x != px { y } else { y - 1 };
        while x < bx.right as isize && y < bx.bottom as isize && a[x as usize] == b[y as usize] {
            x += 1;
            y += 1;
        }
        vf[at(k)] = x;
        if bx.delta() % 2 != 0 && (-(d - 1)..=d - 1).contains(&c) && y >= vb[at(c)] {
            return Some((Point { x: px as usize, y: py as usize }, Point { x: x as usize, y: y as usize }));
        }
        k -= 2;
    }
    None
}

fn backward<T: PartialEq>(a: &[T], b: &[T], bx: &Boxed, vf: &[isize], vb: &mut [isize], d: isize, off: isize) -> Option<(Point, Point)> {
    let at = |k: isize| (k + off) as usize;
    let mut c = d;
    while c >= -d {
        let k = c + bx.delta();
        let (py, mut y);
        if c == -d || (c != d && vb[at(c - 1)] > vb[at(c + 1)]) {
            py = vb[at(c + 1)];
            y = py;
        } else {
            py = vb[at(c - 1)];
            y = py - 1;
        }
        let mut x = bx.left as isize + (y - bx.top as isize) + k;
        let px = if d == 0 || y != py { x } else { x + 1 };
        while x > bx.left as isize && y > bx.top as isize && a[(x - 1) as usize] == b[(y - 1) as usize] {
            x -= 1;
            y -= 1;
        }
        vb[at(c)] = y;
        if bx.delta() % 2 == 0 && (-d..=d).contains(&k) && x <= vf[at(k)] {
            return Some((Point { x: x as usize, y: y as usize }, Point { x: px as usize, y: py as usize }));
        }
        c -= 2;
    }
    None
}
