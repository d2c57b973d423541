"""
Local worker pool for experiment sweeps. Each row of a sweep is a SweepJob
executed in its own process; a pycos task schedules at most 'workers' jobs
at a time and a reply thread collects results from a multiprocessing queue.
"""

import collections
import itertools
import multiprocessing
import os
import pickle
import queue
import threading
import time
import traceback

from pycos import Task

from seplab import logger, ConfigInvalid
from seplab import config

__all__ = ['SweepJob', 'SweepCluster', 'ClusterStatus', 'resolve_workers']

ClusterStatus = collections.namedtuple('ClusterStatus', ['jobs', 'jobs_pending', 'workers'])


class SweepJob(object):
    """Job scheduled with SweepCluster.

    Calling the job waits until it is complete and returns its result; any
    exception in the computation is available as .exception (formatted
    traceback) with .status set to Terminated.

    .id is assigned by the cluster unless given to 'submit'; .finish is an
    event set when results are available.
    """

    __slots__ = ('id', 'result', 'exception', 'submit_time', 'start_time', 'end_time',
                 'status', 'finish', '_args', '_kwargs', '_uid')

    Created = 5
    Running = 6
    Terminated = 9
    Finished = 11

    id_iter = itertools.count(start=1)

    def __init__(self, job_id, args, kwargs):
        if job_id is not None:
            self.id = job_id
        else:
            self.id = next(SweepJob.id_iter)
        self.result = None
        self.exception = None
        self.submit_time = time.time()
        self.start_time = None
        self.end_time = None
        self.status = SweepJob.Created
        self.finish = threading.Event()

        self._args = args
        self._kwargs = kwargs
        self._uid = id(self)

    def __call__(self, clear=False):
        self.finish.wait()
        if clear:
            self.finish.clear()
        return self.result

    def __repr__(self):
        return 'SweepJob(%s, status=%s)' % (self.id, self.status)


def _sweep_job_func(computation, uid, args, kwargs, reply_Q):
    """Internal use only.
    """
    reply = {'uid': uid, 'start_time': time.time(), 'result': None, 'exception': None}
    try:
        result = computation(*args, **kwargs)
        pickle.dumps(result)
        reply['result'] = result
        reply['status'] = SweepJob.Finished
    except Exception:
        reply['exception'] = traceback.format_exc()
        reply['status'] = SweepJob.Terminated
    reply['end_time'] = time.time()
    reply_Q.put(reply)


def resolve_workers(requested=None):
    """Number of worker processes: 'requested' if given, else $SEPLAB_WORKERS,
    else the CPU count; never more than the CPU count. 0 runs jobs inline in
    the calling thread.
    """
    cpus = multiprocessing.cpu_count()
    if requested is None:
        env = os.environ.get(config.WorkersEnv)
        if not env:
            return cpus
        try:
            requested = int(env)
        except ValueError:
            raise ConfigInvalid('%s must be an integer, got %r' % (config.WorkersEnv, env))
    requested = int(requested)
    if requested < 0:
        raise ConfigInvalid('workers must be non-negative, got %r' % (requested,))
    return min(requested, cpus)


class SweepCluster(object):
    """Run 'computation' (a picklable module-level function) on argument
    tuples given to 'submit', in at most 'workers' concurrent processes.

    'job_status', if given, is called with each job when it finishes. A job
    whose process exits without a reply is Terminated, with the exit code in
    .exception.
    """

    def __init__(self, computation, workers=None, job_status=None):
        self.computation = computation
        self.workers = resolve_workers(workers)
        self.job_status = job_status
        self.start_time = time.time()
        self._jobs = []
        self._pending = {}
        self._procs = {}
        self._running = 0
        self._lock = threading.Lock()
        if self.workers > 0:
            self._reply_Q = multiprocessing.Queue()
            self._reply_Q_thread = threading.Thread(target=self.__reply_Q)
            self._reply_Q_thread.daemon = True
            self._reply_Q_thread.start()
            self._scheduler = Task(self._schedule_proc)
        else:
            self._reply_Q = None
            self._scheduler = None
        logger.debug('sweep cluster with %d workers', self.workers)

    def submit(self, *args, **kwargs):
        return self.submit_id(None, *args, **kwargs)

    def submit_id(self, job_id, *args, **kwargs):
        job = SweepJob(job_id, args, kwargs)
        with self._lock:
            self._jobs.append(job)
        if self._scheduler is None:
            self._run_inline(job)
        else:
            with self._lock:
                self._pending[job._uid] = job
            self._scheduler.send(job)
        return job

    def _run_inline(self, job):
        job.status = SweepJob.Running
        job.start_time = time.time()
        try:
            job.result = self.computation(*job._args, **job._kwargs)
            job.status = SweepJob.Finished
        except Exception:
            job.exception = traceback.format_exc()
            job.status = SweepJob.Terminated
            logger.warning('job %s failed: %s', job.id, job.exception)
        job.end_time = time.time()
        job.finish.set()
        if self.job_status:
            self.job_status(job)

    def _schedule_proc(self, task=None):
        # generator
        task.set_daemon()
        queued = collections.deque()
        while 1:
            msg = yield task.receive()
            if msg is None:
                break
            if isinstance(msg, SweepJob):
                queued.append(msg)
            elif msg == 'done':
                self._running -= 1
            while queued and self._running < self.workers:
                job = queued.popleft()
                proc = multiprocessing.Process(target=_sweep_job_func,
                                               args=(self.computation, job._uid, job._args,
                                                     job._kwargs, self._reply_Q))
                job.status = SweepJob.Running
                job.start_time = time.time()
                with self._lock:
                    self._procs[job._uid] = proc
                proc.start()
                self._running += 1
                logger.debug('started job %s (pid %s)', job.id, proc.pid)

    def __reply_Q(self):
        suspects = set()
        while 1:
            try:
                reply = self._reply_Q.get(timeout=config.WorkerPollInterval)
            except queue.Empty:
                suspects = self._reap_dead(suspects)
                continue
            if reply is None:
                break
            self._finish_reply(reply)

    def _reap_dead(self, suspects):
        # a process seen dead at two consecutive empty polls sent no reply
        with self._lock:
            dead = set(uid for uid, proc in self._procs.items()
                       if proc.pid is not None and not proc.is_alive())
        for uid in dead & suspects:
            with self._lock:
                proc = self._procs.get(uid)
            if proc is None:
                continue
            msg = 'worker process %s exited with code %s without a reply' % (proc.pid,
                                                                               proc.exitcode)
            self._finish_reply({'uid': uid, 'result': None, 'exception': msg,
                                'end_time': time.time(), 'status': SweepJob.Terminated})
        return dead - suspects

    def _finish_reply(self, reply):
        with self._lock:
            job = self._pending.pop(reply['uid'], None)
            proc = self._procs.pop(reply['uid'], None)
        if proc is not None:
            proc.join()
        if job is None:
            logger.warning('ignoring reply for unknown job %s', reply['uid'])
            return
        job.result = reply['result']
        job.exception = reply['exception']
        job.start_time = reply.get('start_time', job.start_time)
        job.end_time = reply['end_time']
        job.status = reply['status']
        if job.status == SweepJob.Terminated:
            logger.warning('job %s failed: %s', job.id, job.exception)
        job.finish.set()
        if self.job_status:
            try:
                self.job_status(job)
            except Exception:
                logger.warning('job_status callback failed: %s', traceback.format_exc())
        self._scheduler.send('done')

    def status(self):
        with self._lock:
            jobs = list(self._jobs)
            pending = len(self._pending)
        return ClusterStatus(jobs, pending, self.workers)

    def wait(self, timeout=None):
        """Wait for scheduled jobs to complete; returns False on timeout.
        """
        deadline = None if timeout is None else time.time() + timeout
        for job in self.status().jobs:
            remaining = None if deadline is None else max(0.0, deadline - time.time())
            if not job.finish.wait(remaining):
                return False
        return True

    def close(self, timeout=None):
        if not self.wait(timeout):
            logger.warning('closing sweep cluster with %d jobs pending', self.status().jobs_pending)
        if self._scheduler is not None:
            self._reply_Q.put(None)
            self._reply_Q_thread.join()
            self._scheduler.send(None)
            self._scheduler = None

    def print_status(self, wall_time=None):
        """Prints status of jobs (see 'status').
        """
        print('')
        heading = ' %15s | %10s | %10s' % ('Job', 'Status', 'Sec')
        print(heading)
        print('-' * len(heading))
        names = {SweepJob.Created: 'Created', SweepJob.Running: 'Running',
                 SweepJob.Terminated: 'Terminated', SweepJob.Finished: 'Finished'}
        info = self.status()
        cpu_time = 0.0
        for job in info.jobs:
            secs = 0.0
            if job.start_time and job.end_time:
                secs = job.end_time - job.start_time
            cpu_time += secs
            print(' %15.15s | %10s | %10.3f' % (job.id, names.get(job.status, job.status), secs))
        print('')
        if info.jobs_pending:
            print('Jobs pending: %s' % info.jobs_pending)
        msg = 'Total job time: %.3f sec' % cpu_time
        if not wall_time:
            wall_time = time.time() - self.start_time
        msg += ', wall time: %.3f sec, speedup: %.3f' % (wall_time, cpu_time / wall_time)
        print(msg)
        print('')

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_value, trace):
        self.close()
        return False

