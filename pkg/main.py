"""
主应用入口：混合回传 CRAN 仿真服务

本文件挂载实验框架的路由，支持直接启动。
"""
import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from harness.config import NETWORK_PRESETS
from harness.router import router as harness_router

logger = logging.getLogger("cran_sim.main")

if not NETWORK_PRESETS:
    logger.warning("No network presets loaded; check CRAN_PRESETS_DIR")

app = FastAPI(title="cran-sim")
app.include_router(harness_router)

origins = [
    "*"
    # 部署时只允许前端地址
]

app.add_middleware(
    CORSMiddleware,
    allow_origins=origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

if __name__ == "__main__":
    import uvicorn
    uvicorn.run("main:app", host="0.0.0.0", port=8000, reload=True)
