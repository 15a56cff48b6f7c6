//! Single-band GeoTIFF reader and a minimal float32 writer.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, Write};
use std::path::Path;

use tiff::decoder::{Decoder, DecodingResult, Limits};
use tiff::encoder::{colortype, TiffEncoder};
use tiff::tags::Tag;

use super::affine::AffineTransform;
use super::raster::Raster;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const GT_MODEL_TYPE: u16 = 1024;
const GT_RASTER_TYPE: u16 = 1025;
const PROJ_LINEAR_UNITS: u16 = 3076;
const MODEL_TYPE_GEOGRAPHIC: u16 = 2;
const RASTER_PIXEL_IS_POINT: u16 = 2;
const LINEAR_METER: u16 = 9001;

fn tiff_err(path: &Path, e: tiff::TiffError) -> Error {
    match e {
        tiff::TiffError::IoError(io) => Error::io(path, io),
        other => Error::Unsupported(format!("{}: {other}", path.display())),
    }
}

fn geo_keys<R: Read + Seek>(dec: &mut Decoder<R>) -> Vec<(u16, u16)> {
    let Ok(Some(v)) = dec.find_tag_unsigned_vec::<u16>(Tag::GeoKeyDirectoryTag) else {
        return Vec::new();
    };
    // header: version, revision, minor, count; entries: id, location, count, value
    v.get(4..)
        .unwrap_or_default()
        .chunks_exact(4)
        .filter(|k| k[1] == 0)
        .map(|k| (k[0], k[3]))
        .collect()
}

fn read_transform<R: Read + Seek>(dec: &mut Decoder<R>, path: &Path) -> Result<AffineTransform<f64>> {
    let f64s = |dec: &mut Decoder<R>, tag| -> Result<Option<Vec<f64>>> {
        match dec.find_tag(tag).map_err(|e| tiff_err(path, e))? {
            Some(v) => Ok(Some(v.into_f64_vec().map_err(|e| tiff_err(path, e))?)),
            None => Ok(None),
        }
    };
    if let Some(m) = f64s(dec, Tag::ModelTransformationTag)? {
        if m.len() < 8 {
            return Err(Error::GeoReference(format!(
                "{}: short ModelTransformation",
                path.display()
            )));
        }
        return Ok(AffineTransform::new(m[0], m[1], m[3], m[4], m[5], m[7]));
    }
    let scale = f64s(dec, Tag::ModelPixelScaleTag)?;
    let tie = f64s(dec, Tag::ModelTiepointTag)?;
    match (scale, tie) {
        (Some(s), Some(t)) if s.len() >= 2 && t.len() >= 6 => {
            let (sx, sy) = (s[0], s[1]);
            let (i, j, x, y) = (t[0], t[1], t[3], t[4]);
            Ok(AffineTransform::new(sx, 0.0, x - i * sx, 0.0, -sy, y + j * sy))
        }
        _ => Err(Error::GeoReference(format!(
            "{}: no ModelTransformation or PixelScale+Tiepoint tags",
            path.display()
        ))),
    }
}

fn convert<V: Scalar>(data: DecodingResult) -> Result<Vec<V>> {
    fn cast<V: Scalar, S: Copy + Into<f64>>(v: Vec<S>) -> Vec<V> {
        v.into_iter().map(|x| V::lit(x.into())).collect()
    }
    Ok(match data {
        DecodingResult::U8(v) => cast(v),
        DecodingResult::U16(v) => cast(v),
        DecodingResult::U32(v) => cast(v),
        DecodingResult::I8(v) => cast(v),
        DecodingResult::I16(v) => cast(v),
        DecodingResult::I32(v) => cast(v),
        DecodingResult::F32(v) => cast(v),
        DecodingResult::F64(v) => cast(v),
        _ => return Err(Error::Unsupported("sample type not supported".into())),
    })
}

pub fn read_geotiff_from<V: Scalar, R: Read + Seek>(reader: R, path: &Path) -> Result<Raster<V>> {
    let mut dec = Decoder::new(reader)
        .map_err(|e| tiff_err(path, e))?
        .with_limits(Limits::unlimited());
    let (width, height) = dec.dimensions().map_err(|e| tiff_err(path, e))?;
    let spp: u16 = dec
        .find_tag_unsigned(Tag::SamplesPerPixel)
        .map_err(|e| tiff_err(path, e))?
        .unwrap_or(1);
    if spp != 1 {
        return Err(Error::Unsupported(format!(
            "{}: {spp} bands, expected 1",
            path.display()
        )));
    }

    let keys = geo_keys(&mut dec);
    let key = |id| keys.iter().find(|k| k.0 == id).map(|k| k.1);
    if key(GT_MODEL_TYPE) == Some(MODEL_TYPE_GEOGRAPHIC) {
        return Err(Error::GeoReference(format!(
            "{}: geographic CRS, a projected CRS in meters is required",
            path.display()
        )));
    }
    if let Some(unit) = key(PROJ_LINEAR_UNITS) {
        if unit != LINEAR_METER {
            return Err(Error::GeoReference(format!(
                "{}: linear unit code {unit} is not meters",
                path.display()
            )));
        }
    }
    let mut transform = read_transform(&mut dec, path)?;
    if key(GT_RASTER_TYPE) == Some(RASTER_PIXEL_IS_POINT) {
        // tiepoints address pixel centers; shift to corner registration
        transform = transform.translated(-(transform.a + transform.b) / 2.0, -(transform.d + transform.e) / 2.0);
    }

    let nodata = match dec.find_tag(Tag::GdalNodata).map_err(|e| tiff_err(path, e))? {
        Some(v) => {
            let s = v.into_string().map_err(|e| tiff_err(path, e))?;
            let s = s.trim_matches(|c: char| c == '\0' || c.is_whitespace());
            let n: f64 = s
                .parse()
                .map_err(|_| Error::parse(path, 0, format!("bad GDAL_NODATA {s:?}")))?;
            V::lit(n)
        }
        None => V::nan(),
    };

    let data = dec.read_image().map_err(|e| tiff_err(path, e))?;
    let values = convert(data)?;
    Raster::new(width as usize, height as usize, transform, nodata, values)
}

pub fn read_geotiff<V: Scalar>(path: &Path) -> Result<Raster<V>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_geotiff_from(BufReader::new(file), path)
}

/// Writes a float32 GeoTIFF with a ModelTransformation tag, a projected
/// GeoKey directory and GDAL_NODATA.
pub fn write_geotiff_to<W: Write + Seek>(raster: &Raster<f32>, writer: W, epsg: u16) -> Result<()> {
    let err = |e: tiff::TiffError| Error::Unsupported(format!("GeoTIFF encode: {e}"));
    let mut enc = TiffEncoder::new(writer).map_err(err)?;
    let mut image = enc
        .new_image::<colortype::Gray32Float>(raster.width as u32, raster.height as u32)
        .map_err(err)?;
    let t = &raster.transform;
    let m: [f64; 16] = [
        t.a, t.b, 0.0, t.c, //
        t.d, t.e, 0.0, t.f, //
        0.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    ];
    let keys: [u16; 16] = [
        1,
        1,
        0,
        3, //
        GT_MODEL_TYPE,
        0,
        1,
        1, //
        GT_RASTER_TYPE,
        0,
        1,
        1, //
        3072,
        0,
        1,
        epsg,
    ];
    let enc_dir = image.encoder();
    enc_dir.write_tag(Tag::ModelTransformationTag, &m[..]).map_err(err)?;
    enc_dir.write_tag(Tag::GeoKeyDirectoryTag, &keys[..]).map_err(err)?;
    enc_dir
        .write_tag(Tag::GdalNodata, raster.nodata.to_string().as_str())
        .map_err(err)?;
    image.write_data(&raster.values).map_err(err)
}

pub fn write_geotiff(raster: &Raster<f32>, path: &Path, epsg: u16) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_geotiff_to(raster, &mut w, epsg)?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use std::io::Cursor;

    use super::*;

    #[test]
    fn encode_decode() {
        let t = AffineTransform::north_up(200_000.0, 600_000.0, 30.0);
        let r = Raster::new(3, 2, t, -9999.0f32, vec![0.0, 1.5, -9999.0, 3.0, 4.0, 5.0]).unwrap();
        let mut buf = Cursor::new(Vec::new());
        write_geotiff_to(&r, &mut buf, 5186).unwrap();
        buf.set_position(0);
        let back: Raster<f32> = read_geotiff_from(buf, Path::new("mem.tif")).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.stats().unwrap().valid_count, 5);
    }

    #[test]
    fn plain_tiff_has_no_georeference() {
        let mut buf = Cursor::new(Vec::new());
        {
            let mut enc = TiffEncoder::new(&mut buf).unwrap();
            enc.write_image::<colortype::Gray32Float>(2, 1, &[0.0, 1.0]).unwrap();
        }
        buf.set_position(0);
        let e = read_geotiff_from::<f32, _>(buf, Path::new("plain.tif")).unwrap_err();
        assert!(matches!(e, Error::GeoReference(_)), "{e}");
    }
}
