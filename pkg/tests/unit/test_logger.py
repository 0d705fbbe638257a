"""
Unit tests for logger.py

Tests cover logger creation, the shared file/console handlers, log levels
and output verification.
"""

import logging

import pytest

from config.config import MORSE_LOG_DIR
from MorseInsight.utils.logger import LOG_DIR, LOG_FILE, get_logger, set_console_level


@pytest.fixture
def console_handler():
    get_logger("handler_probe")
    handler = next(
        h for h in logging.getLogger().handlers
        if isinstance(h, logging.StreamHandler) and not isinstance(h, logging.FileHandler)
    )
    level = handler.level
    yield handler
    handler.setLevel(level)


class TestLoggerCreation:
    """Test suite for logger creation and initialization"""

    def test_get_logger_returns_logger_instance(self):
        """Test that get_logger returns a valid Logger instance"""
        assert isinstance(get_logger("test_logger"), logging.Logger)

    def test_get_logger_same_name_returns_same_instance(self):
        """Test that calling get_logger with same name returns same logger instance"""
        assert get_logger("duplicate_test") is get_logger("duplicate_test")

    def test_logger_level_is_debug(self):
        """Test that logger is set to DEBUG level"""
        assert get_logger("level_test").level == logging.DEBUG


class TestLoggerConfiguration:
    """Test suite for logger configuration and handlers"""

    def test_handlers_installed_once(self):
        """Test repeated calls do not stack handlers on the root logger"""
        get_logger("first")
        count = len(logging.getLogger().handlers)
        get_logger("second")
        get_logger("third")
        assert len(logging.getLogger().handlers) == count

    def test_file_handler_writes_debug(self):
        """Test the file handler records DEBUG messages"""
        logger = get_logger("file_probe")
        logger.debug("file handler probe message")
        for handler in logging.getLogger().handlers:
            handler.flush()
        assert LOG_FILE.exists()
        assert "file handler probe message" in LOG_FILE.read_text(encoding="utf-8")

    def test_log_dir_under_configured_root(self):
        """Test the per-day folder lives under MORSE_LOG_DIR"""
        assert str(LOG_DIR).startswith(MORSE_LOG_DIR)
        assert LOG_FILE.suffix == ".log"

    def test_log_format(self):
        """Test the record format carries name, level and line number"""
        logger = get_logger("format_probe")
        logger.info("format probe")
        for handler in logging.getLogger().handlers:
            handler.flush()
        line = next(l for l in LOG_FILE.read_text(encoding="utf-8").splitlines() if "format probe" in l)
        assert "format_probe: INFO:" in line


class TestConsoleLevel:
    """Test suite for set_console_level"""

    def test_set_by_name(self, console_handler):
        """Test names are accepted case-insensitively"""
        set_console_level("error")
        assert console_handler.level == logging.ERROR

    def test_set_by_number(self, console_handler):
        """Test numeric levels"""
        set_console_level(logging.INFO)
        assert console_handler.level == logging.INFO

    def test_caplog_sees_records(self, caplog):
        """Test records propagate to pytest's capture"""
        with caplog.at_level(logging.WARNING):
            get_logger("caplog_probe").warning("visible warning")
        assert "visible warning" in caplog.text
