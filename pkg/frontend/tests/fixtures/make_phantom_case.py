"""Create one phantom case (volume + ground truth NRRD) for UI integration
tests and print its geometry as JSON."""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[3] / "src"))

from segbench import nrrdio  # noqa: E402
from segbench.phantom import PhantomSpec, lesion_bounding_box, make_phantom  # noqa: E402

out = Path(sys.argv[1])
out.mkdir(parents=True, exist_ok=True)

spec = PhantomSpec(
    volume_extent_mm=(60, 60, 50),
    background_level=60.0,
    lesion_center_mm=(30, 30, 25),
    lesion_radii_mm=(8, 8, 8),
    lesion_contrast=45.0,
    speckle_sigma=0.03,
    boundary_blur_sigma_mm=0.3,
    rng_seed=5,
)
vol, gt = make_phantom(spec)
nrrdio.write_volume(out / "volume.nrrd", vol)
nrrdio.write_mask(out / "gt.nrrd", gt)
box = lesion_bounding_box(spec)
print(
    json.dumps(
        {
            "volume": str(out / "volume.nrrd"),
            "gt": str(out / "gt.nrrd"),
            "lesion_box": box.to_json(),
            "lesion_center_mm": list(spec.lesion_center_mm),
            "spacing_mm": list(spec.spacing_mm),
        }
    )
)
