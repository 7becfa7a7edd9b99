"""
实验框架的统一配置。
- HarnessSettings：并行度、结果目录、预设目录、日志级别，读取 CRAN_ 前缀的环境变量与 .env 文件
- NETWORK_PRESETS：启动时从 config/presets/ 目录加载的全部网络预设（JSON），按 name 索引
"""
from __future__ import annotations

import glob
import json
import logging
import os
from functools import lru_cache
from typing import Dict

from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .models import NetworkPreset

logger = logging.getLogger(__name__)

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_PRESETS_DIR = os.path.join(PROJECT_ROOT, "config", "presets")


class HarnessSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="CRAN_", env_file=".env", extra="ignore")

    workers: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)  # 并行处理的信道实现数，CRAN_WORKERS，缺省为 CPU 核数
    results_dir: str = "./results"  # 结果输出目录
    presets_dir: str = DEFAULT_PRESETS_DIR  # 网络预设 JSON 目录
    log_level: str = "INFO"


@lru_cache(maxsize=1)
def get_settings() -> HarnessSettings:
    return HarnessSettings()


def load_presets(directory: str) -> Dict[str, NetworkPreset]:
    """
    读取目录下全部 *.json 预设文件；目录不存在或文件无法解析时记录警告并跳过。
    """
    presets: Dict[str, NetworkPreset] = {}
    if not os.path.isdir(directory):
        logger.warning("Preset directory not found: %s", directory)
        return presets
    for file_path in sorted(glob.glob(os.path.join(directory, "*.json"))):
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                preset = NetworkPreset.model_validate(json.load(f))
        except (OSError, json.JSONDecodeError, ValidationError) as exc:
            logger.warning("Skipping preset file %s: %s", file_path, exc)
            continue
        presets[preset.name] = preset
    return presets


# 初始化加载
NETWORK_PRESETS: Dict[str, NetworkPreset] = load_presets(get_settings().presets_dir)


def get_preset(name: str) -> NetworkPreset:
    """按名称取预设，未知名称抛出 ValueError。"""
    if name not in NETWORK_PRESETS:
        raise ValueError(f"unknown preset {name!r}; available: {sorted(NETWORK_PRESETS)}")
    return NETWORK_PRESETS[name]
