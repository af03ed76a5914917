use super::BinaryImage;

/// Dilation with a `(2r+1) x (2r+1)` square structuring element, done as a
/// horizontal then vertical running max.
pub fn dilate(img: &BinaryImage, radius: usize) -> BinaryImage {
    if radius == 0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let src = img.pixels();
    let mut horiz = vec![0u8; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let lo = x.saturating_sub(radius);
            let hi = (x + radius).min(w - 1);
            horiz[y * w + x] = row[lo..=hi].iter().copied().max().unwrap_or(0);
        }
    }
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        let lo = y.saturating_sub(radius);
        let hi = (y + radius).min(h - 1);
        for x in 0..w {
            out[y * w + x] = (lo..=hi).map(|yy| horiz[yy * w + x]).max().unwrap_or(0);
        }
    }
    let mut res = BinaryImage::from_pixels(w, h, out).expect("same dimensions");
    res.pixel_size = img.pixel_size;
    res
}

/// 4-neighbour Laplacian `[[0,1,0],[1,-4,1],[0,1,0]]` with zero padding;
/// a pixel is set iff the response is nonzero.
pub fn laplace_edges(img: &BinaryImage) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let mut out = BinaryImage::new(w, h);
    out.pixel_size = img.pixel_size;
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let at = |dx: i64, dy: i64| img.get_signed(x + dx, y + dy) as i32;
            let response = at(1, 0) + at(-1, 0) + at(0, 1) + at(0, -1) - 4 * at(0, 0);
            if response != 0 {
                out.set(x as usize, y as usize, true);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> BinaryImage {
        let px = (0..w * h)
            .map(|_| u8::from(rng.random_bool(density)))
            .collect();
        BinaryImage::from_pixels(w, h, px).unwrap()
    }

    /// Reference dilation straight from the definition.
    fn dilate_brute(img: &BinaryImage, r: i64) -> BinaryImage {
        let mut out = BinaryImage::new(img.width(), img.height());
        for y in 0..img.height() as i64 {
            for x in 0..img.width() as i64 {
                let hit = (-r..=r).any(|dy| (-r..=r).any(|dx| img.get_signed(x + dx, y + dy)));
                out.set(x as usize, y as usize, hit);
            }
        }
        out
    }

    #[test]
    fn radius_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_image(&mut rng, 17, 9, 0.3);
        assert_eq!(dilate(&img, 0), img);
    }

    #[test]
    fn single_pixel_becomes_block() {
        let mut img = BinaryImage::new(7, 7);
        img.set(3, 3, true);
        let out = dilate(&img, 1);
        assert_eq!(out.count_set(), 9);
        for y in 2..=4 {
            for x in 2..=4 {
                assert!(out.get(x, y));
            }
        }
    }

    #[test]
    fn dilation_matches_definition_and_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let img = random_image(&mut rng, 32, 32, 0.05);
            let mut prev = img.clone();
            for r in 0..4 {
                let d = dilate(&img, r);
                assert_eq!(d, dilate_brute(&img, r as i64));
                assert!(img.is_subset_of(&d));
                assert!(prev.is_subset_of(&d));
                assert!(d.count_set() >= prev.count_set());
                prev = d;
            }
        }
    }

    #[test]
    fn laplace_zero_image() {
        let img = BinaryImage::new(10, 6);
        assert_eq!(laplace_edges(&img).count_set(), 0);
    }

    #[test]
    fn laplace_solid_block_keeps_boundary() {
        let img = BinaryImage::from_pixels(5, 5, vec![1; 25]).unwrap();
        let edges = laplace_edges(&img);
        assert_eq!(edges.count_set(), 16);
        assert!(!edges.get(2, 2) && !edges.get(1, 1) && !edges.get(3, 2));
        assert!(edges.get(0, 0) && edges.get(4, 2));
    }

    #[test]
    fn laplace_single_pixel_is_plus_shape() {
        let mut img = BinaryImage::new(5, 5);
        img.set(2, 2, true);
        let edges = laplace_edges(&img);
        let set: Vec<(usize, usize)> = (0..25)
            .map(|i| (i % 5, i / 5))
            .filter(|&(x, y)| edges.get(x, y))
            .collect();
        assert_eq!(set, vec![(2, 1), (1, 2), (2, 2), (3, 2), (2, 3)]);
    }

    #[test]
    fn laplace_stays_near_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let img = dilate(&random_image(&mut rng, 40, 40, 0.02), 2);
            let edges = laplace_edges(&img);
            // within the 4-neighbourhood closure of the input
            let mut closure = img.clone();
            for y in 0..40i64 {
                for x in 0..40i64 {
                    let near = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]
                        .iter()
                        .any(|(dx, dy)| img.get_signed(x + dx, y + dy));
                    closure.set(x as usize, y as usize, near);
                }
            }
            assert!(edges.is_subset_of(&closure));
        }
        let mut solid = BinaryImage::new(20, 20);
        for y in 4..16 {
            for x in 3..12 {
                solid.set(x, y, true);
            }
        }
        let inside = laplace_edges(&solid)
            .pixels()
            .iter()
            .zip(solid.pixels())
            .filter(|(&e, &s)| e == 1 && s == 1)
            .count();
        assert!(inside < solid.count_set());
    }
}
