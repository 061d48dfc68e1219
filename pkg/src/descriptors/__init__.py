"""
Patch descriptor regressors (PCA, AE, CAE), their training, model files and reports.
"""
