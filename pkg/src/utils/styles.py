"""
CSS for the photon-pair source dashboard.
"""

CUSTOM_CSS = """
<style>
    .main-header {
        color: #1b2a49;
        border-bottom: 2px solid #7a3cff;
        padding-bottom: 0.3rem;
    }
    .subheader {
        font-size: 16px;
        color: #4a5a78;
    }
    .result-box {
        font-family: 'Menlo', 'Consolas', monospace;
        background-color: #f4f0ff;
        border-left: 4px solid #7a3cff;
        padding: 12px 16px;
        margin-bottom: 16px;
    }
    .error-response {
        background-color: #fff1ec;
        border-left: 4px solid #d9480f;
        padding: 12px 16px;
    }
    .stButton>button {
        background-color: #7a3cff;
        color: white;
    }
</style>
"""

# classes the components render into
DASHBOARD_CLASSES = ("main-header", "subheader", "result-box", "error-response")
