"""Engine modules: lens models, camera geometry, view synthesis, triangulation, skeletons."""
