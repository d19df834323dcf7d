"""Linear biomarker combinations that maximize the TPR at a fixed FPR."""
