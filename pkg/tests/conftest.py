import os

# Keep multi-start runs in-process so tests are deterministic and cheap to fork.
os.environ.setdefault("KERNID_THREADS", "1")
