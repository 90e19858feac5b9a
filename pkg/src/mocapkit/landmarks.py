"""Canonical 2D keypoint layout used by the ingestion schema.

The detector-side layout carries 25 landmark slots per person. Indices
follow the common 25-point body model ordering (nose/neck/limbs plus feet).
Only 21 of the 25 are used by triangulation-driven marker augmentation:
the four face points (eyes, ears) carry no skeletal information. Published
descriptions of this marker set are inconsistent about whether it has 21
or 25 points; the file schema always carries 25 slots and downstream
stages consume the 21-point subset.
"""

LANDMARK_NAMES = (
    "Nose",        # 0
    "Neck",        # 1
    "RShoulder",   # 2
    "RElbow",      # 3
    "RWrist",      # 4
    "LShoulder",   # 5
    "LElbow",      # 6
    "LWrist",      # 7
    "MidHip",      # 8
    "RHip",        # 9
    "RKnee",       # 10
    "RAnkle",      # 11
    "LHip",        # 12
    "LKnee",       # 13
    "LAnkle",      # 14
    "REye",        # 15
    "LEye",        # 16
    "REar",        # 17
    "LEar",        # 18
    "LBigToe",     # 19
    "LSmallToe",   # 20
    "LHeel",       # 21
    "RBigToe",     # 22
    "RSmallToe",   # 23
    "RHeel",       # 24
)

N_LANDMARKS = len(LANDMARK_NAMES)

# face points are not used for segment-frame construction
FACE_LANDMARKS = ("REye", "LEye", "REar", "LEar")

SKELETAL_LANDMARKS = tuple(n for n in LANDMARK_NAMES if n not in FACE_LANDMARKS)

LANDMARK_INDEX = {name: i for i, name in enumerate(LANDMARK_NAMES)}


def landmark_name(index: int) -> str:
    if not 0 <= index < N_LANDMARKS:
        raise ValueError(f"landmark index {index} outside 0..{N_LANDMARKS - 1}")
    return LANDMARK_NAMES[index]
