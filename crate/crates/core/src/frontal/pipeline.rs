use super::template::{DepthTemplate, MeanShape};
use super::FrontalError;
use crate::cascade::{Shape2D, Shape3D};
use crate::geometry::{
    horn_align, DepthImage, GrayImage, Point2, Point3, SimilarityTransform3D,
};
use serde::Serialize;

/// A sign-flipped mesh triangle only counts as folded once its flipped
/// area exceeds this many pixels per pixel of its longest edge; smaller
/// flips are sliver noise, not self-occlusion.
const FOLD_TOLERANCE: f64 = 2.0;

/// Vertical face half, in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryMode {
    Asymmetric,
    Symmetric,
}

#[derive(Debug, Clone, Copy)]
pub struct FrontalizeConfig {
    /// Hull expansion fraction applied per side when cropping.
    pub crop_margin: f64,
    /// Final output resolution (square).
    pub output_size: usize,
    /// Occlusion threshold as a fraction of the median hull density.
    pub density_threshold_factor: f64,
}

impl Default for FrontalizeConfig {
    fn default() -> Self {
        FrontalizeConfig {
            crop_margin: 0.15,
            output_size: 224,
            density_threshold_factor: 0.5,
        }
    }
}

/// Face region cut out of the input image, with landmarks re-expressed in
/// crop coordinates.
#[derive(Debug, Clone)]
pub struct CroppedFace {
    pub image: GrayImage,
    pub landmarks: Shape2D,
    pub origin: (usize, usize),
}

/// Template depth warped onto the input face geometry; shares the crop's
/// XY grid.
#[derive(Debug, Clone)]
pub struct AlignedModel {
    pub depth: DepthImage,
    pub landmarks: Shape3D,
}

/// Frontalized 3D points with per-point source-pixel provenance.
#[derive(Debug, Clone)]
pub struct FrontalizedCloud {
    pub points: Vec<Point3>,
    pub provenance: Vec<(usize, usize)>,
}

/// Per-pixel projected point densities plus occlusion flags.
#[derive(Debug, Clone)]
pub struct DensityMask {
    pub width: usize,
    pub height: usize,
    pub density: Vec<f64>,
    pub occluded: Vec<bool>,
    pub threshold: f64,
    pub median: f64,
    hull: Vec<bool>,
}

impl DensityMask {
    pub fn density_at(&self, x: usize, y: usize) -> f64 {
        self.density[y * self.width + x]
    }

    pub fn is_occluded(&self, x: usize, y: usize) -> bool {
        self.occluded[y * self.width + x]
    }

    pub fn in_hull(&self, x: usize, y: usize) -> bool {
        self.hull[y * self.width + x]
    }

    pub fn occluded_count(&self) -> usize {
        self.occluded.iter().filter(|&&o| o).count()
    }

    pub fn hull_count(&self) -> usize {
        self.hull.iter().filter(|&&h| h).count()
    }
}

/// Output raster frame: dimensions plus the landmark hull that bounds the
/// face region.
#[derive(Debug, Clone)]
pub struct OutputGrid {
    pub width: usize,
    pub height: usize,
    pub hull_points: Vec<Point2>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub transform: [[f64; 4]; 4],
    pub scale: f64,
    pub side: Side,
    pub crop_origin: (usize, usize),
    pub density_median: f64,
    pub density_threshold: f64,
    pub occluded_pixels: usize,
    pub hull_pixels: usize,
    pub mirror_fallbacks: u32,
}

/// Full frontalization result: raw mapped texture, mirror-corrected images
/// and mean-shape-normalized finals in both symmetry variants.
#[derive(Debug, Clone)]
pub struct FrontalizationOutput {
    pub raw_texture: GrayImage,
    pub corrected_asymmetric: GrayImage,
    pub corrected_symmetric: GrayImage,
    pub final_asymmetric: GrayImage,
    pub final_symmetric: GrayImage,
    pub density: DensityMask,
    pub side: Side,
    /// Landmark positions of the final images; identical for every
    /// successfully frontalized input.
    pub output_landmarks: Shape2D,
    pub diagnostics: Diagnostics,
}

/// Crops the landmark hull expanded by `margin` per side, re-expressing the
/// landmarks in crop coordinates.
pub fn crop_face(
    image: &GrayImage,
    landmarks: &Shape2D,
    margin: f64,
) -> Result<CroppedFace, FrontalError> {
    let (w, h) = (image.width() as f64, image.height() as f64);
    if !landmarks.is_finite() {
        return Err(FrontalError::LandmarkDegenerate(
            "non-finite landmark".into(),
        ));
    }
    for p in landmarks.points() {
        if p.x < 0.0 || p.y < 0.0 || p.x > w - 1.0 || p.y > h - 1.0 {
            return Err(FrontalError::LandmarkDegenerate(format!(
                "landmark {p:?} outside the image"
            )));
        }
    }
    let b = landmarks.bbox();
    if b.width < 2.0 || b.height < 2.0 {
        return Err(FrontalError::LandmarkDegenerate(
            "landmark hull collapses to zero area".into(),
        ));
    }
    let x0 = (b.x - margin * b.width).floor().max(0.0) as usize;
    let y0 = (b.y - margin * b.height).floor().max(0.0) as usize;
    let x1 = (b.x + b.width + margin * b.width).ceil().min(w - 1.0) as usize;
    let y1 = (b.y + b.height + margin * b.height).ceil().min(h - 1.0) as usize;
    let cw = x1 - x0 + 1;
    let ch = y1 - y0 + 1;
    Ok(CroppedFace {
        image: image.crop(x0, y0, cw, ch),
        landmarks: landmarks.translated(-(x0 as f64), -(y0 as f64)),
        origin: (x0, y0),
    })
}

/// Fits the depth template to the cropped face: warps the template depth
/// from the template landmark mesh onto the input landmark mesh. Folded or
/// collapsed input triangles are fit failures.
pub fn fit_depth_model(
    template: &DepthTemplate,
    crop: &CroppedFace,
) -> Result<AlignedModel, FrontalError> {
    if crop.landmarks.n_landmarks() != template.landmarks.n_landmarks() {
        return Err(FrontalError::FitFailed(format!(
            "{} landmarks supplied, template has {}",
            crop.landmarks.n_landmarks(),
            template.landmarks.n_landmarks()
        )));
    }
    let input_mesh = template
        .mesh
        .with_vertices(crop.landmarks.points())
        .map_err(|e| FrontalError::FitFailed(format!("degenerate landmark mesh: {e}")))?;
    for i in 0..input_mesh.triangles().len() {
        let a = input_mesh.triangle_area(i);
        let t = template.mesh.triangle_area(i);
        if a.signum() != t.signum() {
            // Sliver triangles flip sign under a pixel of landmark noise
            // without the surface actually self-occluding, so a flip only
            // counts as a fold once the flipped area is large relative to
            // the triangle size.
            let tri = input_mesh.triangles()[i];
            let v = [
                input_mesh.vertices()[tri[0]],
                input_mesh.vertices()[tri[1]],
                input_mesh.vertices()[tri[2]],
            ];
            let longest = v[0]
                .dist(&v[1])
                .max(v[1].dist(&v[2]))
                .max(v[2].dist(&v[0]));
            if a.abs() > FOLD_TOLERANCE * longest.max(1e-9) {
                return Err(FrontalError::FitFailed(format!(
                    "triangle {i} is folded (area {a:.4} vs template {t:.4})"
                )));
            }
        }
    }
    let depth = crate::geometry::piecewise_affine_warp(
        &template.mesh,
        &input_mesh,
        &template.depth,
        crop.image.width(),
        crop.image.height(),
    )
    .map_err(|e| FrontalError::FitFailed(format!("depth warp: {e}")))?;
    let mut coords = Vec::with_capacity(crop.landmarks.n_landmarks() * 3);
    for (i, p) in crop.landmarks.points().iter().enumerate() {
        let z = depth
            .sample_bilinear(p.x, p.y)
            .unwrap_or_else(|| template.landmarks.point(i).z);
        coords.push(p.x);
        coords.push(p.y);
        coords.push(z);
    }
    Ok(AlignedModel {
        depth,
        landmarks: Shape3D::new(coords),
    })
}

/// Horn alignment of the fitted landmarks onto the template landmarks: the
/// transform that maps the aligned model back to frontal pose.
pub fn estimate_frontal_transform(
    s_a: &Shape3D,
    s_r: &Shape3D,
) -> Result<SimilarityTransform3D, FrontalError> {
    if s_a.n_landmarks() != s_r.n_landmarks() {
        return Err(FrontalError::TransformDegenerate(format!(
            "{} vs {} landmarks",
            s_a.n_landmarks(),
            s_r.n_landmarks()
        )));
    }
    horn_align(&s_a.points(), &s_r.points())
        .map_err(|e| FrontalError::TransformDegenerate(e.to_string()))
}

/// Applies the frontalizing transform to every valid pixel of the aligned
/// model, keeping source-pixel provenance.
pub fn frontalize_cloud(aligned: &AlignedModel, t: &SimilarityTransform3D) -> FrontalizedCloud {
    let mut points = Vec::new();
    let mut provenance = Vec::new();
    for y in 0..aligned.depth.height() {
        for x in 0..aligned.depth.width() {
            if !aligned.depth.valid(x, y) {
                continue;
            }
            let p = Point3::new(x as f64, y as f64, aligned.depth.get(x, y));
            points.push(t.apply(p));
            provenance.push((x, y));
        }
    }
    FrontalizedCloud { points, provenance }
}

fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &Point2, a: &Point2, b: &Point2| -> f64 {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let mut lower: Vec<Point2> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub(crate) fn hull_mask_for(width: usize, height: usize, hull_points: &[Point2]) -> Vec<bool> {
    let hull = convex_hull(hull_points);
    let mut mask = vec![false; width * height];
    if hull.len() < 3 {
        return mask;
    }
    for y in 0..height {
        for x in 0..width {
            let p = Point2::new(x as f64, y as f64);
            let inside = hull.iter().enumerate().all(|(i, a)| {
                let b = &hull[(i + 1) % hull.len()];
                (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= -1e-9
            });
            mask[y * width + x] = inside;
        }
    }
    mask
}

/// Inverse-distance-weighted fill from the 4 nearest `filled` pixels.
pub(crate) fn idw_fill(
    values: &[f64],
    filled: &[bool],
    width: usize,
    height: usize,
    x: usize,
    y: usize,
) -> Option<f64> {
    let mut best: Vec<(f64, f64)> = Vec::new(); // (distance^2, value)
    let max_r = width.max(height) as i64;
    let mut r = 1i64;
    while r <= max_r {
        let (xi, yi) = (x as i64, y as i64);
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs() != r && dy.abs() != r {
                    continue; // ring only
                }
                let (nx, ny) = (xi + dx, yi + dy);
                if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                    continue;
                }
                let idx = ny as usize * width + nx as usize;
                if filled[idx] {
                    best.push(((dx * dx + dy * dy) as f64, values[idx]));
                }
            }
        }
        // One extra ring after finding enough candidates, so a diagonal
        // neighbor cannot beat an unseen closer one.
        if best.len() >= 4 {
            break;
        }
        r += 1;
    }
    if best.is_empty() {
        return None;
    }
    best.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    best.truncate(4);
    let mut num = 0.0;
    let mut den = 0.0;
    for (d2, v) in best {
        let w = 1.0 / d2.sqrt();
        num += w * v;
        den += w;
    }
    Some(num / den)
}

/// Splats the cloud's source intensities onto the output grid (nearest
/// pixel, collisions averaged), records point densities, interpolates
/// missing hull pixels and flags low-density pixels as occluded.
pub fn map_texture(
    cloud: &FrontalizedCloud,
    cropped: &GrayImage,
    grid: &OutputGrid,
    density_threshold_factor: f64,
) -> Result<(GrayImage, DensityMask), FrontalError> {
    if cloud.points.is_empty() {
        return Err(FrontalError::EmptyCloud);
    }
    let (w, h) = (grid.width, grid.height);
    let mut sum = vec![0.0_f64; w * h];
    let mut count = vec![0.0_f64; w * h];
    for (p, &(sx, sy)) in cloud.points.iter().zip(&cloud.provenance) {
        let ox = p.x.round();
        let oy = p.y.round();
        if ox < 0.0 || oy < 0.0 || ox >= w as f64 || oy >= h as f64 {
            continue;
        }
        let idx = oy as usize * w + ox as usize;
        sum[idx] += cropped.get(sx, sy);
        count[idx] += 1.0;
    }
    let hull = hull_mask_for(w, h, &grid.hull_points);
    let filled: Vec<bool> = count.iter().map(|&c| c > 0.0).collect();
    if !filled.iter().any(|&f| f) {
        return Err(FrontalError::EmptyCloud);
    }
    let values: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0.0 { s / c } else { 0.0 })
        .collect();

    let mut texture = GrayImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            if filled[idx] {
                texture.set(x, y, values[idx]);
                texture.set_valid(x, y, hull[idx] || filled[idx]);
            } else if hull[idx] {
                match idw_fill(&values, &filled, w, h, x, y) {
                    Some(v) => texture.set(x, y, v),
                    None => texture.set_valid(x, y, false),
                }
            } else {
                texture.set_valid(x, y, false);
            }
        }
    }

    // Occlusion threshold: fraction of the median density over hull pixels.
    let mut hull_densities: Vec<f64> = hull
        .iter()
        .zip(&count)
        .filter(|(&inh, _)| inh)
        .map(|(_, &c)| c)
        .collect();
    hull_densities.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if hull_densities.is_empty() {
        0.0
    } else {
        hull_densities[hull_densities.len() / 2]
    };
    let threshold = density_threshold_factor * median;
    let occluded: Vec<bool> = (0..w * h)
        .map(|i| hull[i] && count[i] < threshold)
        .collect();
    Ok((
        texture,
        DensityMask {
            width: w,
            height: h,
            density: count,
            occluded,
            threshold,
            median,
            hull,
        },
    ))
}

/// Picks the vertical half with the higher mean landmark quality, split at
/// the landmark-centroid x. Ties go left.
pub fn choose_mirror_side(landmarks: &Shape2D, quality: &[f64]) -> Side {
    assert_eq!(landmarks.n_landmarks(), quality.len());
    let cx = landmarks.centroid().x;
    let (mut lsum, mut lcount, mut rsum, mut rcount) = (0.0, 0usize, 0.0, 0usize);
    for (i, p) in landmarks.points().iter().enumerate() {
        if p.x < cx {
            lsum += quality[i];
            lcount += 1;
        } else {
            rsum += quality[i];
            rcount += 1;
        }
    }
    let lmean = if lcount > 0 { lsum / lcount as f64 } else { 0.0 };
    let rmean = if rcount > 0 { rsum / rcount as f64 } else { 0.0 };
    if rmean > lmean {
        Side::Right
    } else {
        Side::Left
    }
}

/// Mirror correction about the vertical `midline`. Asymmetric mode replaces
/// only occlusion-flagged pixels; symmetric mode replicates the chosen side
/// wholesale. Returns the corrected image and the number of pixels whose
/// mirror source was itself occluded (filled by interpolation instead).
pub fn mirror_fill(
    texture: &GrayImage,
    mask: &DensityMask,
    side: Side,
    mode: SymmetryMode,
    midline: f64,
) -> Result<(GrayImage, u32), FrontalError> {
    if texture.width() != mask.width || texture.height() != mask.height {
        return Err(FrontalError::FitFailed(
            "texture and density mask dimensions differ".into(),
        ));
    }
    let (w, h) = (texture.width(), texture.height());
    let mut out = texture.clone();
    let mut fallbacks = 0u32;
    match mode {
        SymmetryMode::Asymmetric => {
            let clean: Vec<bool> = (0..w * h)
                .map(|i| !mask.occluded[i])
                .zip(texture.mask())
                .map(|(c, &v)| c && v)
                .collect();
            for y in 0..h {
                for x in 0..w {
                    if !mask.is_occluded(x, y) {
                        continue;
                    }
                    let mxf = (2.0 * midline - x as f64).round();
                    let mirrored = if mxf >= 0.0 && mxf < w as f64 {
                        let mx = mxf as usize;
                        if !mask.is_occluded(mx, y) && texture.valid(mx, y) {
                            Some(texture.get(mx, y))
                        } else {
                            None
                        }
                    } else {
                        None
                    };
                    match mirrored {
                        Some(v) => out.set(x, y, v),
                        None => {
                            fallbacks += 1;
                            if let Some(v) = idw_fill(texture.data(), &clean, w, h, x, y) {
                                out.set(x, y, v);
                            }
                        }
                    }
                    out.set_valid(x, y, true);
                }
            }
        }
        SymmetryMode::Symmetric => {
            for y in 0..h {
                for x in 0..w {
                    let replicate_target = match side {
                        Side::Left => x as f64 > midline,
                        Side::Right => (x as f64) < midline,
                    };
                    if !replicate_target {
                        continue;
                    }
                    let mxf = (2.0 * midline - x as f64).round();
                    if mxf >= 0.0 && mxf < w as f64 {
                        let mx = mxf as usize;
                        out.set(x, y, texture.get(mx, y));
                        out.set_valid(x, y, texture.valid(mx, y));
                    }
                }
            }
        }
    }
    Ok((out, fallbacks))
}

/// Warps the corrected image from its landmark mesh onto the canonical
/// mean shape at the fixed output resolution; pixels outside the mean-shape
/// hull become background (0).
pub fn map_to_mean_shape(
    image: &GrayImage,
    landmarks: &Shape2D,
    mean: &MeanShape,
) -> Result<GrayImage, FrontalError> {
    if landmarks.n_landmarks() != mean.shape.n_landmarks() {
        return Err(FrontalError::FitFailed(format!(
            "{} landmarks vs mean shape {}",
            landmarks.n_landmarks(),
            mean.shape.n_landmarks()
        )));
    }
    let src_mesh = mean
        .mesh
        .with_vertices(landmarks.points())
        .map_err(|e| FrontalError::FitFailed(format!("degenerate source mesh: {e}")))?;
    let mut out = crate::geometry::piecewise_affine_warp(
        &src_mesh,
        &mean.mesh,
        image,
        mean.width,
        mean.height,
    )
    .map_err(|e| FrontalError::FitFailed(format!("mean-shape warp: {e}")))?;
    for y in 0..out.height() {
        for x in 0..out.width() {
            if !out.valid(x, y) {
                out.set(x, y, 0.0);
            }
        }
    }
    Ok(out)
}

/// End-to-end frontalization. `quality` scores feed the mirror-side choice;
/// pass `None` for externally supplied landmarks (uniform quality, left
/// tie-break).
pub fn frontalize(
    image: &GrayImage,
    landmarks: &Shape2D,
    quality: Option<&[f64]>,
    template: &DepthTemplate,
    config: &FrontalizeConfig,
) -> Result<FrontalizationOutput, FrontalError> {
    let uniform = vec![1.0; landmarks.n_landmarks()];
    let quality = quality.unwrap_or(&uniform);
    if quality.len() != landmarks.n_landmarks() {
        return Err(FrontalError::LandmarkDegenerate(
            "quality scores do not match landmark count".into(),
        ));
    }
    let crop = crop_face(image, landmarks, config.crop_margin)?;
    let aligned = fit_depth_model(template, &crop)?;
    let transform = estimate_frontal_transform(&aligned.landmarks, &template.landmarks)?;
    let cloud = frontalize_cloud(&aligned, &transform);
    let grid = OutputGrid {
        width: template.depth.width(),
        height: template.depth.height(),
        hull_points: template.landmarks_2d().points(),
    };
    let (raw_texture, density) =
        map_texture(&cloud, &crop.image, &grid, config.density_threshold_factor)?;
    let side = choose_mirror_side(&crop.landmarks, quality);
    let midline = template.nose_bridge_x();
    let (corrected_asymmetric, fallbacks) = mirror_fill(
        &raw_texture,
        &density,
        side,
        SymmetryMode::Asymmetric,
        midline,
    )?;
    let (corrected_symmetric, _) = mirror_fill(
        &raw_texture,
        &density,
        side,
        SymmetryMode::Symmetric,
        midline,
    )?;
    let mean = MeanShape::from_landmarks(&template.landmarks_2d(), &template.mesh, config.output_size)?;
    let frontal_landmarks = template.landmarks_2d();
    let final_asymmetric = map_to_mean_shape(&corrected_asymmetric, &frontal_landmarks, &mean)?;
    let final_symmetric = map_to_mean_shape(&corrected_symmetric, &frontal_landmarks, &mean)?;
    let diagnostics = Diagnostics {
        transform: *transform.matrix(),
        scale: transform.scale(),
        side,
        crop_origin: crop.origin,
        density_median: density.median,
        density_threshold: density.threshold,
        occluded_pixels: density.occluded_count(),
        hull_pixels: density.hull_count(),
        mirror_fallbacks: fallbacks,
    };
    Ok(FrontalizationOutput {
        raw_texture,
        corrected_asymmetric,
        corrected_symmetric,
        final_asymmetric,
        final_symmetric,
        density,
        side,
        output_landmarks: mean.shape,
        diagnostics,
    })
}
